#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "airfed/world.hpp"

namespace airfed {

// Full multi-hop timing decomposition of one task. Per-hop transfer times are
// kept so the energy attribution can be replayed without re-deriving rates.
struct PathRecord {
    long task_id = -1;
    int origin_device = -1;
    std::vector<int> path;             // serving UAV first, executor last
    double t_uplink = 0.0;
    double t_decision = 0.0;
    double t_forward = 0.0;
    double t_queue = 0.0;
    double t_compute = 0.0;
    double t_return = 0.0;
    double t_downlink = 0.0;
    double t_total = 0.0;
    bool met_deadline = false;
    double deadline_s = 0.0;
    double created_at = 0.0;
    double admitted_at = 0.0;
    std::vector<double> forward_hop_s;  // path[i] -> path[i+1], input payload
    std::vector<double> return_hop_s;   // path[i+1] -> path[i], result payload

    int hops() const { return static_cast<int>(path.size()); }
    double component_sum() const {
        return t_uplink + t_decision + t_forward + t_queue + t_compute + t_return + t_downlink;
    }
};

namespace tasking {

// Strongest-signal service association. Returns nullopt when no active UAV
// covers the device (NoCoverage); ties resolve to the lowest UAV index.
inline std::optional<int> select_serving_uav(const WorldState& w, int device) {
    const auto& p = w.cfg.radio;
    int best = -1;
    double best_rssi = -1.0;
    for (const auto& u : w.uavs) {
        if (!u.active) continue;
        double r = airfed::radio::rssi(p.uav_tx_w, p.gain_ag,
                                       airfed::radio::distance(u.pos, w.devices[device].loc));
        if (r > best_rssi) {
            best_rssi = r;
            best = u.id;
        }
    }
    if (best < 0 || !airfed::radio::coverage_indicator(best_rssi, p.rssi_min_w)) return std::nullopt;
    return best;
}

inline double queue_delay(const ComputeQueue& q, double cpu_hz) {
    return q.total_cycles() / cpu_hz;
}

// Evaluates the end-to-end timing of `path` on a frozen world snapshot.
// Preconditions (coverage, connectivity, executor capacity) are enforced
// here; violations raise InfeasiblePath and must not debit energy.
// `allow_capacity_overrun` admits the forced-local fallback case, where the
// engine records the overrun as a soft constraint event instead of failing.
inline PathRecord execute_path(const Task& task, const std::vector<int>& path,
                               const WorldState& w, const std::vector<bool>& transmitting,
                               bool allow_capacity_overrun = false) {
    if (path.empty()) throw InfeasiblePath("execute_path: empty path");
    const auto& cfg = w.cfg;
    int serving = path.front();
    int executor = path.back();

    if (!w.uav(serving).active || !radio::covers(w, serving, task.origin_device))
        throw InfeasiblePath("execute_path: serving UAV does not cover origin device");
    for (size_t i = 0; i + 1 < path.size(); ++i) {
        if (!w.uav(path[i]).active || !w.uav(path[i + 1]).active ||
            !airfed::radio::inter_uav_connected(cfg.radio, w.uav(path[i]).pos, w.uav(path[i + 1]).pos))
            throw InfeasiblePath("execute_path: broken inter-UAV link");
    }
    if (!allow_capacity_overrun &&
        w.uav(executor).load_cycles + task.cycles > cfg.load_max_cycles)
        throw InfeasiblePath("execute_path: executor over capacity");

    PathRecord rec;
    rec.task_id = task.id;
    rec.origin_device = task.origin_device;
    rec.path = path;
    rec.deadline_s = task.deadline_s;
    rec.created_at = task.created_at;
    rec.admitted_at = w.clock;

    rec.t_uplink = task.in_bytes * 8.0 / radio::uplink_rate(w, serving, task.origin_device, transmitting);
    rec.t_decision = cfg.decision_time_s * static_cast<double>(path.size());
    for (size_t i = 0; i + 1 < path.size(); ++i) {
        double rate = airfed::radio::inter_uav_rate(cfg.radio, w.uav(path[i]).pos, w.uav(path[i + 1]).pos);
        rec.forward_hop_s.push_back(task.in_bytes * 8.0 / rate);
        rec.t_forward += rec.forward_hop_s.back();
    }
    rec.t_queue = queue_delay(w.queues[static_cast<size_t>(executor)], w.uav(executor).cpu_hz);
    rec.t_compute = task.cycles / w.uav(executor).cpu_hz;
    // Results retrace the path in reverse order.
    for (size_t i = path.size(); i-- > 1;) {
        double rate = airfed::radio::inter_uav_rate(cfg.radio, w.uav(path[i]).pos, w.uav(path[i - 1]).pos);
        rec.return_hop_s.push_back(task.out_bytes * 8.0 / rate);
        rec.t_return += rec.return_hop_s.back();
    }
    rec.t_downlink = task.out_bytes * 8.0 / radio::downlink_rate(w, serving, task.origin_device);
    rec.t_total = rec.t_uplink + rec.t_decision + rec.t_forward + rec.t_queue + rec.t_compute +
                  rec.t_return + rec.t_downlink;
    rec.met_deadline = rec.t_total <= task.deadline_s;
    return rec;
}

// --- exhaustive path oracle ---------------------------------------------------
//
// Independent evaluation of the timing model: rates and the composition are
// re-derived from scratch here, on purpose, so agreement with execute_path is
// a meaningful cross-check rather than a tautology.

namespace detail {

inline double oracle_path_time(const Task& task, const std::vector<int>& path,
                               const WorldState& w, const std::vector<bool>& transmitting) {
    const auto& cfg = w.cfg;
    auto dist3 = [](const Vec3& a, const Vec3& b) {
        double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
        return std::sqrt(dx * dx + dy * dy + dz * dz);
    };
    const auto& dev = w.devices[static_cast<size_t>(task.origin_device)];
    Vec3 dev_pos{dev.loc.x, dev.loc.y, 0.0};

    // Uplink with interference from concurrently transmitting devices.
    double d_up = dist3(w.uav(path.front()).pos, dev_pos);
    double sig = cfg.radio.dev_tx_w * cfg.radio.gain_ag / (d_up * d_up);
    double interf = 0.0;
    for (size_t m = 0; m < w.devices.size(); ++m) {
        if (static_cast<int>(m) == task.origin_device || !transmitting[m]) continue;
        double dm = dist3(w.uav(path.front()).pos, Vec3{w.devices[m].loc.x, w.devices[m].loc.y, 0.0});
        interf += cfg.radio.dev_tx_w * cfg.radio.gain_ag / (dm * dm);
    }
    double total = task.in_bytes * 8.0 /
                   (cfg.radio.bandwidth_ag_hz * std::log2(1.0 + sig / (cfg.radio.noise_w + interf)));

    // Per-UAV decision latency along the path.
    total += static_cast<double>(path.size()) * cfg.decision_time_s;

    // Input forwarding and result return over air-air links.
    for (size_t i = 0; i + 1 < path.size(); ++i) {
        double d = dist3(w.uav(path[i]).pos, w.uav(path[i + 1]).pos);
        double s = cfg.radio.uav_tx_w * cfg.radio.gain_aa / (d * d);
        double rate = cfg.radio.bandwidth_aa_hz * std::log2(1.0 + s / cfg.radio.noise_w);
        total += task.in_bytes * 8.0 / rate + task.out_bytes * 8.0 / rate;
    }

    // Queue wait plus execution at the final UAV.
    const auto& q = w.queues[static_cast<size_t>(path.back())];
    double pending = 0.0;
    for (const auto& e : q.entries) pending += e.second;
    total += (pending + task.cycles) / w.uav(path.back()).cpu_hz;

    // Downlink back to the device, interference-free.
    double sig_down = cfg.radio.uav_tx_w * cfg.radio.gain_ag / (d_up * d_up);
    total += task.out_bytes * 8.0 /
             (cfg.radio.bandwidth_ag_hz * std::log2(1.0 + sig_down / cfg.radio.noise_w));
    return total;
}

inline void enumerate_paths(const WorldState& w, const Task& task, std::vector<int>& cur,
                            std::vector<bool>& visited, int max_hops,
                            std::vector<std::vector<int>>& out) {
    // Any prefix whose tail has executor capacity is a complete candidate.
    int tail = cur.back();
    if (w.uav(tail).load_cycles + task.cycles <= w.cfg.load_max_cycles) out.push_back(cur);
    if (static_cast<int>(cur.size()) >= max_hops) return;
    for (int j = 0; j < static_cast<int>(w.uavs.size()); ++j) {
        if (visited[static_cast<size_t>(j)] || !w.uav(j).active) continue;
        if (!airfed::radio::inter_uav_connected(w.cfg.radio, w.uav(tail).pos, w.uav(j).pos)) continue;
        cur.push_back(j);
        visited[static_cast<size_t>(j)] = true;
        enumerate_paths(w, task, cur, visited, max_hops, out);
        visited[static_cast<size_t>(j)] = false;
        cur.pop_back();
    }
}

}  // namespace detail

struct OracleResult {
    std::vector<int> path;
    double t_total = 0.0;
};

// All feasible simple paths from the serving UAV, up to max_hops nodes.
inline std::vector<std::vector<int>> oracle_enumerate_paths(const WorldState& w, const Task& task,
                                                            int max_hops) {
    auto serving = select_serving_uav(w, task.origin_device);
    if (!serving) return {};
    std::vector<int> cur{*serving};
    std::vector<bool> visited(w.uavs.size(), false);
    visited[static_cast<size_t>(*serving)] = true;
    std::vector<std::vector<int>> out;
    detail::enumerate_paths(w, task, cur, visited, max_hops, out);
    return out;
}

inline double oracle_path_time(const Task& task, const std::vector<int>& path, const WorldState& w,
                               const std::vector<bool>& transmitting) {
    return detail::oracle_path_time(task, path, w, transmitting);
}

// Brute-force minimizer over the enumeration; ties go to the
// lexicographically smallest path.
inline std::optional<OracleResult> oracle_best_path(const WorldState& w, const Task& task,
                                                    int max_hops,
                                                    const std::vector<bool>& transmitting) {
    auto paths = oracle_enumerate_paths(w, task, max_hops);
    if (paths.empty()) return std::nullopt;
    OracleResult best;
    bool first = true;
    for (const auto& p : paths) {
        double t = detail::oracle_path_time(task, p, w, transmitting);
        if (first || t < best.t_total ||
            (t == best.t_total && std::lexicographical_compare(p.begin(), p.end(),
                                                               best.path.begin(), best.path.end()))) {
            best.path = p;
            best.t_total = t;
            first = false;
        }
    }
    return best;
}

}  // namespace tasking

// --- per-task energy attribution ---------------------------------------------

namespace energy {

struct EnergyDebit {
    int uav = -1;
    double uplink = 0.0;
    double decision = 0.0;
    double forward = 0.0;
    double process = 0.0;
    double return_ = 0.0;
    double downlink = 0.0;

    double total() const { return uplink + decision + forward + process + return_ + downlink; }
};

// Maps a completed PathRecord onto per-UAV energy debits (receive power on
// the uplink, decision CPU power along the path, tx+rx on every transfer
// hop, idle+CMOS at the executor, tx on the downlink).
inline std::vector<EnergyDebit> task_energy(const PathRecord& rec, const Task& task,
                                            const WorldState& w) {
    const auto& cfg = w.cfg;
    std::vector<EnergyDebit> debits(rec.path.size());
    for (size_t i = 0; i < rec.path.size(); ++i) {
        debits[i].uav = rec.path[i];
        debits[i].decision = cfg.energy.cpu_w * cfg.decision_time_s;
    }
    debits.front().uplink = cfg.radio.uav_rx_w * rec.t_uplink;
    for (size_t i = 0; i + 1 < rec.path.size(); ++i) {
        debits[i].forward += cfg.radio.uav_tx_w * rec.forward_hop_s[i];
        debits[i + 1].forward += cfg.radio.uav_rx_w * rec.forward_hop_s[i];
    }
    auto& exec = debits.back();
    exec.process = cfg.energy.idle_w * rec.t_queue +
                   compute_energy(w.uav(rec.path.back()).cpu_hz, task.cycles, cfg.energy);
    // return_hop_s[0] is executor -> predecessor.
    for (size_t i = 0; i < rec.return_hop_s.size(); ++i) {
        size_t sender = rec.path.size() - 1 - i;
        debits[sender].return_ += cfg.radio.uav_tx_w * rec.return_hop_s[i];
        debits[sender - 1].return_ += cfg.radio.uav_rx_w * rec.return_hop_s[i];
    }
    debits.front().downlink = cfg.radio.uav_tx_w * rec.t_downlink;
    return debits;
}

}  // namespace energy

}  // namespace airfed
