#pragma once

#include <deque>
#include <limits>
#include <vector>

#include "airfed/config.hpp"
#include "airfed/energy.hpp"
#include "airfed/radio.hpp"
#include "airfed/rng.hpp"

namespace airfed {

struct Task {
    long id = -1;
    int origin_device = -1;
    double cycles = 0.0;
    double in_bytes = 0.0;
    double out_bytes = 0.0;
    double deadline_s = 0.0;
    double created_at = 0.0;
    std::vector<int> path;  // filled at admission; non-empty once admitted
};

struct UavState {
    int id = -1;
    Vec3 pos;
    Vec2 vel;
    double energy_j = 0.0;
    double load_cycles = 0.0;
    double cpu_hz = 0.0;
    double v_max = 20.0;
    double accel = 5.0;
    bool active = true;
};

struct IotDevice {
    int id = -1;
    Vec2 loc;
    double rate_hz = 0.0;         // Poisson task-generation rate
    std::deque<Task> queue;       // spawned, awaiting uplink admission

    // Remaining time budget of the most urgent queued task; +inf when empty.
    double most_urgent_deadline(double now) const {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& t : queue) {
            double rem = t.deadline_s - (now - t.created_at);
            if (rem < best) best = rem;
        }
        return best;
    }
};

// FIFO of work admitted to one UAV's processor.
struct ComputeQueue {
    int owner = -1;
    std::deque<std::pair<long, double>> entries;  // (task id, remaining cycles)

    double total_cycles() const {
        double s = 0.0;
        for (const auto& e : entries) s += e.second;
        return s;
    }

    void push(long task_id, double cycles) { entries.emplace_back(task_id, cycles); }

    // Drain up to `cycles` of work front-to-back.
    void drain(double cycles) {
        while (cycles > 0.0 && !entries.empty()) {
            auto& front = entries.front();
            if (front.second > cycles) {
                front.second -= cycles;
                cycles = 0.0;
            } else {
                cycles -= front.second;
                entries.pop_front();
            }
        }
    }
};

// Hard-constraint audit. Counters increment on any detected violation of the
// operating envelope; a clean run keeps every counter at zero.
struct AuditCounters {
    long velocity_bound = 0;      // ||v|| <= v_max
    long kinematics = 0;          // position update consistent with velocity
    long admission_coverage = 0;  // first hop covers the origin device
    long energy_budget = 0;       // total consumption within initial battery
    long load_capacity = 0;       // queue load within load_max
    long path_connectivity = 0;   // consecutive path hops within comm range
    long attention_rows = 0;      // attention rows summing to 1
    long transfer_rows = 0;       // transfer-matrix rows summing to 1 (or zero)
    long aggregation_weights = 0; // FL weight vectors summing to 1
    long inactive_actions = 0;    // actions submitted for inactive UAVs (warn)
    long capacity_overruns = 0;   // forced-local fallback beyond load_max

    long hard_total() const {
        return velocity_bound + kinematics + admission_coverage + energy_budget +
               load_capacity + path_connectivity + attention_rows + transfer_rows +
               aggregation_weights;
    }
};

struct WorldState {
    SimConfig cfg;
    double clock = 0.0;
    long step_count = 0;
    long next_task_id = 0;
    std::vector<UavState> uavs;
    std::vector<IotDevice> devices;
    std::vector<ComputeQueue> queues;
    std::vector<EnergyLedger> ledgers;
    std::vector<double> initial_energy;
    // Pairwise cooperation event counts (task forwards + FL exchanges),
    // feeding the coop-layer edge feature.
    std::vector<std::vector<double>> coop_events;
    AuditCounters audit;
    Rng env_rng{0};

    const UavState& uav(int k) const { return uavs[static_cast<size_t>(k)]; }
    UavState& uav(int k) { return uavs[static_cast<size_t>(k)]; }
};

// --- sim-core kinematics ----------------------------------------------------

// Norm-preserving direction clip to the velocity envelope.
inline Vec2 clip_velocity(const Vec2& v_raw, double v_max) {
    double n = v_raw.norm();
    if (n <= v_max) return v_raw;
    double s = v_max / n;
    return {v_raw.x * s, v_raw.y * s};
}

// Euler position update with a reflecting clamp at the service-area walls:
// the position is clamped and the offending velocity component zeroed.
inline void update_position(UavState& u, double dt, double area_m) {
    u.pos.x += u.vel.x * dt;
    u.pos.y += u.vel.y * dt;
    if (u.pos.x < 0.0) { u.pos.x = 0.0; u.vel.x = 0.0; }
    if (u.pos.x > area_m) { u.pos.x = area_m; u.vel.x = 0.0; }
    if (u.pos.y < 0.0) { u.pos.y = 0.0; u.vel.y = 0.0; }
    if (u.pos.y > area_m) { u.pos.y = area_m; u.vel.y = 0.0; }
}

// Poisson arrivals over dt; task attributes drawn from the configured ranges.
inline std::vector<Task> spawn_tasks(const IotDevice& d, double dt, const TaskRanges& r,
                                     double now, long& next_id, Rng& rng) {
    std::vector<Task> out;
    int n = rng.poisson(d.rate_hz * dt);
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        Task t;
        t.id = next_id++;
        t.origin_device = d.id;
        t.cycles = rng.uniform(r.cycles_lo, r.cycles_hi);
        t.in_bytes = rng.uniform(r.in_bytes_lo, r.in_bytes_hi);
        t.out_bytes = rng.uniform(r.out_bytes_lo, r.out_bytes_hi);
        t.deadline_s = rng.uniform(r.deadline_lo, r.deadline_hi);
        t.created_at = now;
        out.push_back(t);
    }
    return out;
}

// Graph-refresh cadence shrinks with flight speed.
inline double adaptive_update_interval(const Vec2& v, double dt_base, double alpha_speed) {
    return dt_base / (1.0 + alpha_speed * v.norm());
}

// --- radio ops that need world context ---------------------------------------

namespace radio {

// Sum of received powers at rx_uav from other devices flagged as transmitting
// this step. `transmitting[m]` marks devices with an uplink in progress.
inline double uplink_interference(const WorldState& w, int rx_uav, int tx_device,
                                  const std::vector<bool>& transmitting) {
    double sum = 0.0;
    const auto& u = w.uav(rx_uav);
    for (size_t m = 0; m < w.devices.size(); ++m) {
        if (static_cast<int>(m) == tx_device || !transmitting[m]) continue;
        sum += airfed::radio::rssi(w.cfg.radio.dev_tx_w, w.cfg.radio.gain_ag,
                                   airfed::radio::distance(u.pos, w.devices[m].loc));
    }
    return sum;
}

inline double uplink_rate(const WorldState& w, int uav, int device,
                          const std::vector<bool>& transmitting) {
    const auto& p = w.cfg.radio;
    double signal = airfed::radio::rssi(p.dev_tx_w, p.gain_ag,
                                        airfed::radio::distance(w.uav(uav).pos, w.devices[device].loc));
    double interf = uplink_interference(w, uav, device, transmitting);
    return airfed::radio::link_capacity(p.bandwidth_ag_hz, signal, interf, p.noise_w);
}

// Downlink mirrors the uplink with UAV transmit power and no interference
// (single association per device).
inline double downlink_rate(const WorldState& w, int uav, int device) {
    const auto& p = w.cfg.radio;
    double signal = airfed::radio::rssi(p.uav_tx_w, p.gain_ag,
                                        airfed::radio::distance(w.uav(uav).pos, w.devices[device].loc));
    return airfed::radio::link_capacity(p.bandwidth_ag_hz, signal, 0.0, p.noise_w);
}

inline bool covers(const WorldState& w, int uav, int device) {
    const auto& p = w.cfg.radio;
    double r = airfed::radio::rssi(p.uav_tx_w, p.gain_ag,
                                   airfed::radio::distance(w.uav(uav).pos, w.devices[device].loc));
    return airfed::radio::coverage_indicator(r, p.rssi_min_w);
}

}  // namespace radio

}  // namespace airfed
