#pragma once

#include <cmath>

#include "airfed/common.hpp"
#include "airfed/config.hpp"

namespace airfed::radio {

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

// Ground devices sit at z = 0.
inline double distance(const Vec3& uav, const Vec2& dev) {
    return distance(uav, Vec3{dev.x, dev.y, 0.0});
}

// Free-space inverse-square received power.
inline double rssi(double p_tx, double gain_const, double d) {
    if (d <= 0.0) throw DegenerateGeometry("rssi: co-located transceivers (d=0)");
    return p_tx * gain_const / (d * d);
}

inline bool coverage_indicator(double rssi_w, double threshold_w) {
    return rssi_w >= threshold_w;
}

// Shannon-Hartley with explicit interference term.
inline double link_capacity(double bandwidth_hz, double signal_w, double interference_w,
                            double noise_w) {
    return bandwidth_hz * std::log2(1.0 + signal_w / (noise_w + interference_w));
}

inline double air_ground_rssi(const RadioParams& p, double p_tx, const Vec3& uav, const Vec2& dev) {
    return rssi(p_tx, p.gain_ag, distance(uav, dev));
}

inline double inter_uav_rssi(const RadioParams& p, const Vec3& a, const Vec3& b) {
    return rssi(p.uav_tx_w, p.gain_aa, distance(a, b));
}

// Air-air links are line-of-sight: interference-free capacity.
inline double inter_uav_rate(const RadioParams& p, const Vec3& a, const Vec3& b) {
    return link_capacity(p.bandwidth_aa_hz, inter_uav_rssi(p, a, b), 0.0, p.noise_w);
}

inline bool inter_uav_connected(const RadioParams& p, const Vec3& a, const Vec3& b) {
    return distance(a, b) <= p.comm_range_m;
}

}  // namespace airfed::radio
