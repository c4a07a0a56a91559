#pragma once

#include <vector>

#include "airfed/tensor.hpp"
#include "airfed/world.hpp"

namespace airfed {

// Per-UAV dual-layer local graph. Row 0 of each layer is the owning UAV;
// coop rows continue with communication neighbors, serv rows with covered
// devices. Edge features are stored flattened (row i*N+j) for the
// attention's edge-key term. All features are standardized to O(1).
struct LocalGraph {
    int owner = -1;
    std::vector<int> coop_ids;    // world UAV indices, [0] == owner
    std::vector<int> serv_devs;   // device indices behind serv rows 1..N-1

    nn::Mat coop_feats;       // N_coop x 10
    nn::Mat coop_edges_flat;  // N_coop^2 x 4: [distance, rssi, bandwidth, coop freq]
    nn::Mat coop_mask;        // N_coop x N_coop
    nn::Mat serv_feats;       // N_serv x 10 (device rows zero-padded)
    nn::Mat serv_edges_flat;  // N_serv^2 x 3: [distance, rssi, uplink rate]
    nn::Mat serv_mask;        // N_serv x N_serv
    nn::Mat transfer;         // N_coop x N_serv, device columns only

    int n_coop() const { return static_cast<int>(coop_feats.rows()); }
    int n_serv() const { return static_cast<int>(serv_feats.rows()); }
};

namespace graphnn {

constexpr int kCoopFeatureDim = 10;  // pos(3) vel(2) energy load cpu + 2 reserved
constexpr int kServFeatureDim = 10;  // loc(2) queue rate urgency, zero padded
constexpr int kCoopEdgeDim = 4;
constexpr int kServEdgeDim = 3;

// Urgency-weighted cross-layer transfer row: w_m = exp(-gamma * urgency_m)
// over covered devices, normalized; all-zero when nothing finite is covered.
inline std::vector<double> transfer_row(const std::vector<bool>& covered,
                                        const std::vector<double>& urgency, double gamma_urg) {
    std::vector<double> w(covered.size(), 0.0);
    double total = 0.0;
    for (size_t m = 0; m < covered.size(); ++m) {
        if (!covered[m]) continue;
        // gamma == 0 must stay uniform even against the +inf empty-queue
        // sentinel (0 * inf would poison the row).
        double v = gamma_urg == 0.0 ? 1.0 : std::exp(-gamma_urg * urgency[m]);
        w[m] = v;
        total += v;
    }
    if (total > 0.0)
        for (auto& v : w) v /= total;
    else
        for (auto& v : w) v = 0.0;
    return w;
}

namespace detail {

inline double norm_rssi(double rssi_w) {
    if (rssi_w <= 0.0) return 0.0;
    return clamp((watts_to_dbm(rssi_w) + 100.0) / 70.0, 0.0, 1.0);
}

inline void fill_uav_row(nn::Mat& feats, long r, const UavState& u, const SimConfig& cfg) {
    feats(r, 0) = u.pos.x / cfg.area_m;
    feats(r, 1) = u.pos.y / cfg.area_m;
    feats(r, 2) = u.pos.z / cfg.area_m;
    feats(r, 3) = u.vel.x / cfg.v_max;
    feats(r, 4) = u.vel.y / cfg.v_max;
    feats(r, 5) = u.energy_j / cfg.battery_j;
    feats(r, 6) = u.load_cycles / cfg.load_max_cycles;
    feats(r, 7) = u.cpu_hz / cfg.cpu_hi_hz;
    feats(r, 8) = 0.0;
    feats(r, 9) = 0.0;
}

}  // namespace detail

inline LocalGraph build_local_graph(const WorldState& w, int k) {
    const auto& cfg = w.cfg;
    LocalGraph g;
    g.owner = k;

    // Cooperation layer: self plus active UAVs within comm range.
    g.coop_ids.push_back(k);
    for (int j = 0; j < static_cast<int>(w.uavs.size()); ++j) {
        if (j == k || !w.uav(j).active) continue;
        if (airfed::radio::inter_uav_connected(cfg.radio, w.uav(k).pos, w.uav(j).pos))
            g.coop_ids.push_back(j);
    }
    int nc = static_cast<int>(g.coop_ids.size());
    g.coop_feats = nn::Mat::Zero(nc, kCoopFeatureDim);
    g.coop_edges_flat = nn::Mat::Zero(static_cast<long>(nc) * nc, kCoopEdgeDim);
    g.coop_mask = nn::Mat::Zero(nc, nc);
    double steps = static_cast<double>(w.step_count) + 1.0;
    for (int i = 0; i < nc; ++i) {
        detail::fill_uav_row(g.coop_feats, i, w.uav(g.coop_ids[static_cast<size_t>(i)]), cfg);
        for (int j = 0; j < nc; ++j) {
            int a = g.coop_ids[static_cast<size_t>(i)];
            int b = g.coop_ids[static_cast<size_t>(j)];
            if (i == j) {
                g.coop_mask(i, j) = 1.0;  // self edge, zero features
                continue;
            }
            double d = airfed::radio::distance(w.uav(a).pos, w.uav(b).pos);
            if (d > cfg.radio.comm_range_m) continue;
            g.coop_mask(i, j) = 1.0;
            long flat = static_cast<long>(i) * nc + j;
            g.coop_edges_flat(flat, 0) = d / cfg.area_m;
            g.coop_edges_flat(flat, 1) =
                detail::norm_rssi(airfed::radio::inter_uav_rssi(cfg.radio, w.uav(a).pos, w.uav(b).pos));
            g.coop_edges_flat(flat, 2) = 1.0;  // B_inter / B_inter
            g.coop_edges_flat(flat, 3) =
                clamp(w.coop_events[static_cast<size_t>(a)][static_cast<size_t>(b)] / steps, 0.0, 1.0);
        }
    }

    // Service layer: self plus covered devices.
    for (int m = 0; m < static_cast<int>(w.devices.size()); ++m)
        if (w.uav(k).active && radio::covers(w, k, m)) g.serv_devs.push_back(m);
    int ns = 1 + static_cast<int>(g.serv_devs.size());
    g.serv_feats = nn::Mat::Zero(ns, kServFeatureDim);
    g.serv_edges_flat = nn::Mat::Zero(static_cast<long>(ns) * ns, kServEdgeDim);
    g.serv_mask = nn::Mat::Zero(ns, ns);
    detail::fill_uav_row(g.serv_feats, 0, w.uav(k), cfg);
    g.serv_mask(0, 0) = 1.0;
    std::vector<bool> transmitting(w.devices.size(), false);
    for (size_t m = 0; m < w.devices.size(); ++m) transmitting[m] = !w.devices[m].queue.empty();
    for (int r = 1; r < ns; ++r) {
        int m = g.serv_devs[static_cast<size_t>(r - 1)];
        const auto& dev = w.devices[static_cast<size_t>(m)];
        g.serv_feats(r, 0) = dev.loc.x / cfg.area_m;
        g.serv_feats(r, 1) = dev.loc.y / cfg.area_m;
        g.serv_feats(r, 2) = static_cast<double>(dev.queue.size()) / 10.0;
        g.serv_feats(r, 3) = dev.rate_hz / cfg.tasks.rate_hi;
        double urg = dev.most_urgent_deadline(w.clock);
        g.serv_feats(r, 4) = std::isfinite(urg) ? clamp(urg / cfg.tasks.deadline_hi, 0.0, 1.0) : 1.0;
        g.serv_mask(r, r) = 1.0;
        g.serv_mask(0, r) = 1.0;
        g.serv_mask(r, 0) = 1.0;
        double d = airfed::radio::distance(w.uav(k).pos, dev.loc);
        double rs = airfed::radio::rssi(cfg.radio.uav_tx_w, cfg.radio.gain_ag, d);
        double up = radio::uplink_rate(w, k, m, transmitting);
        for (auto [i, j] : {std::pair<long, long>{0, r}, std::pair<long, long>{r, 0}}) {
            long flat = i * ns + j;
            g.serv_edges_flat(flat, 0) = d / cfg.area_m;
            g.serv_edges_flat(flat, 1) = detail::norm_rssi(rs);
            g.serv_edges_flat(flat, 2) = clamp(up / (cfg.radio.bandwidth_ag_hz * 25.0), 0.0, 1.0);
        }
    }

    // Cross-layer transfer: each coop node's urgency-weighted distribution
    // over the owner's covered devices; the UAV serv row (column 0) gets no
    // mass.
    g.transfer = nn::Mat::Zero(nc, ns);
    std::vector<double> urgency(g.serv_devs.size(), 0.0);
    for (size_t i = 0; i < g.serv_devs.size(); ++i)
        urgency[i] = w.devices[static_cast<size_t>(g.serv_devs[i])].most_urgent_deadline(w.clock);
    for (int i = 0; i < nc; ++i) {
        int a = g.coop_ids[static_cast<size_t>(i)];
        std::vector<bool> covered(g.serv_devs.size(), false);
        for (size_t c = 0; c < g.serv_devs.size(); ++c)
            covered[c] = w.uav(a).active && radio::covers(w, a, g.serv_devs[c]);
        auto row = transfer_row(covered, urgency, cfg.net.gamma_urg);
        for (size_t c = 0; c < row.size(); ++c) g.transfer(i, static_cast<long>(c) + 1) = row[c];
    }
    return g;
}

}  // namespace graphnn

}  // namespace airfed
