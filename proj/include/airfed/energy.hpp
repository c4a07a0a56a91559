#pragma once

#include <span>
#include <utility>
#include <vector>

#include "airfed/config.hpp"

namespace airfed {

// Per-UAV energy decomposition. e_total is accumulated independently of the
// component fields so the ledger-closure property is a real check.
struct EnergyLedger {
    int uav = -1;
    double e_trajectory = 0.0;
    double e_uplink = 0.0;
    double e_decision = 0.0;
    double e_forward = 0.0;
    double e_process = 0.0;
    double e_return = 0.0;
    double e_downlink = 0.0;
    double e_comm_fl = 0.0;  // optional FL transport accounting
    double e_total = 0.0;

    double component_sum() const {
        return e_trajectory + e_uplink + e_decision + e_forward + e_process + e_return +
               e_downlink + e_comm_fl;
    }
};

namespace energy {

// Hover floor plus cubic aerodynamic drag.
inline double flight_power(double speed, const EnergyParams& p) {
    return p.hover_w + 0.5 * p.air_density * p.drag_area_m2 * p.drag_coeff * speed * speed * speed;
}

// Piecewise-constant integration of flight power over (speed, duration) legs.
inline double trajectory_energy(std::span<const std::pair<double, double>> legs,
                                const EnergyParams& p) {
    double e = 0.0;
    for (const auto& [speed, duration] : legs) e += flight_power(speed, p) * duration;
    return e;
}

// CMOS dynamic energy under DVFS: kappa * f^2 * cycles.
inline double compute_energy(double freq_hz, double cycles, const EnergyParams& p) {
    return p.cmos_kappa * freq_hz * freq_hz * cycles;
}

}  // namespace energy

}  // namespace airfed
