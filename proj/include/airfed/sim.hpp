#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "airfed/metrics.hpp"
#include "airfed/tasking.hpp"
#include "airfed/world.hpp"

namespace airfed {

// Offloading decision callback, invoked once per hop while a task's path is
// being assembled. `cur` holds the task; slot 0 means "execute here", slot
// 1+i forwards to slot_uavs[i]. Only feasible slots may be returned.
using OffloadChooser =
    std::function<int(int cur, const Task& task, const std::vector<int>& slot_uavs,
                      const std::vector<bool>& feasible)>;

struct StepActions {
    // One entry per UAV; disengaged entries are "no action submitted".
    std::vector<std::optional<Vec2>> velocity;
    OffloadChooser chooser;  // may be empty outside admission-relevant tests
};

struct StepOutcome {
    std::vector<PathRecord> completed;       // admitted and resolved this step
    std::vector<Task> failed_admissions;     // no covering UAV
    std::vector<double> energy_step;         // per-UAV joules debited this step
    std::vector<double> served_time_sum;     // per serving UAV, sum of T_total
    std::vector<int> served_count;
    std::vector<double> deadline_overshoot;  // per serving UAV, sum max(0, T-c)
    std::vector<int> coverage_count;         // per UAV, devices covered
    int devices_covered = 0;
    long spawned = 0;
};

namespace sim {

// Debits are capped at the remaining battery so the energy budget constraint
// holds by construction; the cap only binds in the depletion step.
inline double debit(WorldState& w, int uav, double amount, double EnergyLedger::*component) {
    auto& u = w.uav(uav);
    double actual = std::min(amount, u.energy_j);
    u.energy_j -= actual;
    auto& ledger = w.ledgers[static_cast<size_t>(uav)];
    ledger.*component += actual;
    ledger.e_total += actual;
    return actual;
}

// Builds the hop-by-hop path for one task starting at `serving`. Decisions
// come from the chooser; a visited set plus the hop TTL rule out loops.
// Returns the path and whether a capacity overrun was forced.
inline std::pair<std::vector<int>, bool> build_path(WorldState& w, const Task& task, int serving,
                                                    const OffloadChooser& chooser) {
    const auto& cfg = w.cfg;
    std::vector<int> path{serving};
    std::vector<bool> visited(w.uavs.size(), false);
    visited[static_cast<size_t>(serving)] = true;

    while (true) {
        int cur = path.back();
        bool local_ok = w.uav(cur).load_cycles + task.cycles <= cfg.load_max_cycles;
        if (static_cast<int>(path.size()) >= cfg.max_hops) {
            if (!local_ok) ++w.audit.capacity_overruns;
            return {path, !local_ok};
        }

        std::vector<int> slot_uavs;
        std::vector<bool> feasible;
        feasible.push_back(local_ok);
        for (int j = 0; j < static_cast<int>(w.uavs.size()); ++j) {
            if (j == cur) continue;
            slot_uavs.push_back(j);
            bool ok = !visited[static_cast<size_t>(j)] && w.uav(j).active &&
                      airfed::radio::inter_uav_connected(cfg.radio, w.uav(cur).pos, w.uav(j).pos) &&
                      w.uav(j).load_cycles + task.cycles <= cfg.load_max_cycles;
            feasible.push_back(ok);
        }

        bool any = false;
        for (bool f : feasible)
            if (f) { any = true; break; }
        if (!any) {
            // Least-loaded escape hatch: prefer a reachable unvisited
            // neighbor, else execute here with the overrun recorded.
            int best = -1;
            double best_load = 0.0;
            for (size_t s = 0; s < slot_uavs.size(); ++s) {
                int j = slot_uavs[s];
                if (visited[static_cast<size_t>(j)] || !w.uav(j).active) continue;
                if (!airfed::radio::inter_uav_connected(cfg.radio, w.uav(cur).pos, w.uav(j).pos))
                    continue;
                if (best < 0 || w.uav(j).load_cycles < best_load) {
                    best = j;
                    best_load = w.uav(j).load_cycles;
                }
            }
            if (best >= 0 && best_load < w.uav(cur).load_cycles) {
                path.push_back(best);
                visited[static_cast<size_t>(best)] = true;
            }
            ++w.audit.capacity_overruns;
            return {path, true};
        }

        int slot = chooser ? chooser(cur, task, slot_uavs, feasible) : 0;
        if (slot < 0 || slot > static_cast<int>(slot_uavs.size()) ||
            !feasible[static_cast<size_t>(slot)])
            throw SimError("offload chooser returned an infeasible slot");
        if (slot == 0) return {path, false};
        int next = slot_uavs[static_cast<size_t>(slot - 1)];
        path.push_back(next);
        visited[static_cast<size_t>(next)] = true;
    }
}

inline void apply_task_energy(WorldState& w, const PathRecord& rec, const Task& task,
                              StepOutcome& out) {
    auto debits = energy::task_energy(rec, task, w);
    for (const auto& d : debits) {
        out.energy_step[static_cast<size_t>(d.uav)] +=
            debit(w, d.uav, d.uplink, &EnergyLedger::e_uplink) +
            debit(w, d.uav, d.decision, &EnergyLedger::e_decision) +
            debit(w, d.uav, d.forward, &EnergyLedger::e_forward) +
            debit(w, d.uav, d.process, &EnergyLedger::e_process) +
            debit(w, d.uav, d.return_, &EnergyLedger::e_return) +
            debit(w, d.uav, d.downlink, &EnergyLedger::e_downlink);
    }
}

inline void audit_record(WorldState& w, const PathRecord& rec) {
    const auto& cfg = w.cfg;
    if (!radio::covers(w, rec.path.front(), rec.origin_device)) ++w.audit.admission_coverage;
    for (size_t i = 0; i + 1 < rec.path.size(); ++i) {
        if (airfed::radio::distance(w.uav(rec.path[i]).pos, w.uav(rec.path[i + 1]).pos) >
            cfg.radio.comm_range_m)
            ++w.audit.path_connectivity;
    }
}

}  // namespace sim

// Advances the world by one step: kinematics, admission of pending device
// tasks through the offloading choosers, queue/energy bookkeeping, and
// next-step arrivals. Single-writer; deterministic given the world RNG.
inline StepOutcome step_world(WorldState& w, const StepActions& actions,
                              MetricsSink* sink = nullptr) {
    const auto& cfg = w.cfg;
    const int K = static_cast<int>(w.uavs.size());
    const int M = static_cast<int>(w.devices.size());
    StepOutcome out;
    out.energy_step.assign(static_cast<size_t>(K), 0.0);
    out.served_time_sum.assign(static_cast<size_t>(K), 0.0);
    out.served_count.assign(static_cast<size_t>(K), 0);
    out.deadline_overshoot.assign(static_cast<size_t>(K), 0.0);
    out.coverage_count.assign(static_cast<size_t>(K), 0);

    // 1. Velocity actions: clip, integrate, clamp at area walls.
    for (int k = 0; k < K; ++k) {
        auto& u = w.uav(k);
        if (!u.active) {
            if (k < static_cast<int>(actions.velocity.size()) && actions.velocity[k])
                ++w.audit.inactive_actions;
            u.vel = {0.0, 0.0};
            continue;
        }
        if (k < static_cast<int>(actions.velocity.size()) && actions.velocity[k])
            u.vel = clip_velocity(*actions.velocity[k], u.v_max);
        if (u.vel.norm() > u.v_max + 1e-12) ++w.audit.velocity_bound;
        Vec3 before = u.pos;
        Vec2 v_before = u.vel;
        update_position(u, cfg.dt, cfg.area_m);
        double ex = clamp(before.x + v_before.x * cfg.dt, 0.0, cfg.area_m);
        double ey = clamp(before.y + v_before.y * cfg.dt, 0.0, cfg.area_m);
        if (std::abs(u.pos.x - ex) > 1e-9 || std::abs(u.pos.y - ey) > 1e-9 ||
            u.pos.z != before.z)
            ++w.audit.kinematics;
    }

    // 2. Uplink transmit set: devices with pending tasks this step.
    std::vector<bool> transmitting(static_cast<size_t>(M), false);
    for (int m = 0; m < M; ++m) transmitting[static_cast<size_t>(m)] = !w.devices[m].queue.empty();

    // 3. Admission: device index order, FIFO within a device.
    for (int m = 0; m < M; ++m) {
        auto& dev = w.devices[static_cast<size_t>(m)];
        while (!dev.queue.empty()) {
            Task task = dev.queue.front();
            dev.queue.pop_front();
            auto serving = tasking::select_serving_uav(w, m);
            if (!serving) {
                out.failed_admissions.push_back(task);
                if (sink) sink->record_failed_admission(task);
                continue;
            }
            auto [path, overrun] = sim::build_path(w, task, *serving, actions.chooser);
            task.path = path;
            PathRecord rec = tasking::execute_path(task, path, w, transmitting, overrun);
            sim::audit_record(w, rec);
            sim::apply_task_energy(w, rec, task, out);
            auto& q = w.queues[static_cast<size_t>(path.back())];
            q.push(task.id, task.cycles);
            w.uav(path.back()).load_cycles = q.total_cycles();
            if (w.uav(path.back()).load_cycles > cfg.load_max_cycles + 1e-6)
                ++w.audit.load_capacity;
            (void)overrun;
            for (size_t i = 0; i + 1 < path.size(); ++i) {
                w.coop_events[static_cast<size_t>(path[i])][static_cast<size_t>(path[i + 1])] += 1.0;
                w.coop_events[static_cast<size_t>(path[i + 1])][static_cast<size_t>(path[i])] += 1.0;
            }
            int srv = path.front();
            out.served_time_sum[static_cast<size_t>(srv)] += rec.t_total;
            out.served_count[static_cast<size_t>(srv)] += 1;
            out.deadline_overshoot[static_cast<size_t>(srv)] +=
                std::max(0.0, rec.t_total - task.deadline_s);
            if (sink) record_outcome(rec, *sink);
            out.completed.push_back(std::move(rec));
        }
    }

    // 4. Processors drain admitted work.
    for (int k = 0; k < K; ++k) {
        auto& u = w.uav(k);
        if (!u.active) continue;
        auto& q = w.queues[static_cast<size_t>(k)];
        q.drain(u.cpu_hz * cfg.dt);
        u.load_cycles = q.total_cycles();
    }

    // 5. Flight energy for the step.
    for (int k = 0; k < K; ++k) {
        auto& u = w.uav(k);
        if (!u.active) continue;
        out.energy_step[static_cast<size_t>(k)] +=
            sim::debit(w, k, energy::flight_power(u.vel.norm(), cfg.energy) * cfg.dt,
                       &EnergyLedger::e_trajectory);
    }

    // 6. Depletion: deactivate and fail whatever is still queued on board.
    for (int k = 0; k < K; ++k) {
        auto& u = w.uav(k);
        if (u.active && u.energy_j <= 0.0) {
            u.energy_j = 0.0;
            u.active = false;
            u.vel = {0.0, 0.0};
            auto& q = w.queues[static_cast<size_t>(k)];
            for (const auto& [task_id, cycles] : q.entries) {
                if (sink) sink->invalidate_task(task_id);
            }
            q.entries.clear();
            u.load_cycles = 0.0;
        }
        if (w.ledgers[static_cast<size_t>(k)].e_total >
            w.initial_energy[static_cast<size_t>(k)] + 1e-9)
            ++w.audit.energy_budget;
    }

    // 7. Coverage sample for QoS accounting.
    for (int m = 0; m < M; ++m) {
        bool any = false;
        for (int k = 0; k < K; ++k) {
            if (!w.uav(k).active) continue;
            if (radio::covers(w, k, m)) {
                ++out.coverage_count[static_cast<size_t>(k)];
                any = true;
            }
        }
        if (any) ++out.devices_covered;
    }
    if (sink) sink->record_coverage_sample(out.devices_covered);

    // 8. Advance the clock (exact multiples of dt).
    ++w.step_count;
    w.clock = static_cast<double>(w.step_count) * cfg.dt;

    // 9. Next-step arrivals join the device queues.
    for (int m = 0; m < M; ++m) {
        auto& dev = w.devices[static_cast<size_t>(m)];
        auto spawned = spawn_tasks(dev, cfg.dt, cfg.tasks, w.clock, w.next_task_id, w.env_rng);
        out.spawned += static_cast<long>(spawned.size());
        for (auto& t : spawned) dev.queue.push_back(std::move(t));
    }
    if (sink) sink->record_generated(out.spawned);

    return out;
}

}  // namespace airfed
