#pragma once

#include <limits>
#include <vector>

#include "airfed/rng.hpp"
#include "airfed/world.hpp"

namespace airfed {

struct ScenarioSpec {
    int num_uavs = 3;
    int num_devices = 10;
    double area_m = 1000.0;
    uint64_t seed = 1;
};

namespace scenario {

// Farthest-point seeding followed by a fixed number of Lloyd iterations.
// Empty clusters keep their previous centroid; ties go to the lower index.
inline std::vector<Vec2> kmeans(const std::vector<Vec2>& points, int k, Rng& rng,
                                int iterations = 50) {
    std::vector<Vec2> centroids;
    if (points.empty() || k <= 0) return centroids;

    centroids.push_back(points[static_cast<size_t>(rng.uniform_int(static_cast<int>(points.size())))]);
    while (static_cast<int>(centroids.size()) < k) {
        if (static_cast<int>(centroids.size()) >= static_cast<int>(points.size())) {
            // More centroids than points: pad with random duplicates.
            centroids.push_back(points[static_cast<size_t>(rng.uniform_int(static_cast<int>(points.size())))]);
            continue;
        }
        size_t far_idx = 0;
        double far_d = -1.0;
        for (size_t i = 0; i < points.size(); ++i) {
            double dmin = std::numeric_limits<double>::infinity();
            for (const auto& c : centroids) dmin = std::min(dmin, (points[i] - c).norm());
            if (dmin > far_d) {
                far_d = dmin;
                far_idx = i;
            }
        }
        centroids.push_back(points[far_idx]);
    }

    std::vector<int> assign(points.size(), 0);
    for (int it = 0; it < iterations; ++it) {
        for (size_t i = 0; i < points.size(); ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                double d = (points[i] - centroids[static_cast<size_t>(c)]).norm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            assign[i] = best;
        }
        for (int c = 0; c < k; ++c) {
            Vec2 sum{0, 0};
            int n = 0;
            for (size_t i = 0; i < points.size(); ++i) {
                if (assign[i] == c) {
                    sum = sum + points[i];
                    ++n;
                }
            }
            if (n > 0) centroids[static_cast<size_t>(c)] = sum * (1.0 / n);
        }
    }
    return centroids;
}

}  // namespace scenario

// Builds the initial world: devices uniform over the area, UAV ground
// positions at k-means centroids of the device locations, altitudes and CPU
// frequencies sampled per UAV. Fully determined by cfg.rng_seed.
inline WorldState generate_scenario(const SimConfig& cfg) {
    WorldState w;
    w.cfg = cfg;
    Rng root(cfg.rng_seed);
    Rng place = root.fork(0x5C3A0001ULL);
    w.env_rng = root.fork(0x5C3A0002ULL);

    w.devices.resize(static_cast<size_t>(cfg.num_devices));
    std::vector<Vec2> locs;
    for (int m = 0; m < cfg.num_devices; ++m) {
        auto& d = w.devices[static_cast<size_t>(m)];
        d.id = m;
        d.loc = {place.uniform(0.0, cfg.area_m), place.uniform(0.0, cfg.area_m)};
        d.rate_hz = place.uniform(cfg.tasks.rate_lo, cfg.tasks.rate_hi);
        locs.push_back(d.loc);
    }

    auto centroids = scenario::kmeans(locs, cfg.num_uavs, place);
    w.uavs.resize(static_cast<size_t>(cfg.num_uavs));
    for (int k = 0; k < cfg.num_uavs; ++k) {
        auto& u = w.uavs[static_cast<size_t>(k)];
        u.id = k;
        u.pos = {centroids[static_cast<size_t>(k)].x, centroids[static_cast<size_t>(k)].y,
                 place.uniform(cfg.altitude_lo, cfg.altitude_hi)};
        u.vel = {0.0, 0.0};
        u.energy_j = cfg.battery_j;
        u.cpu_hz = place.uniform(cfg.cpu_lo_hz, cfg.cpu_hi_hz);
        u.v_max = cfg.v_max;
        u.accel = cfg.accel;
        u.active = true;
    }

    w.queues.resize(static_cast<size_t>(cfg.num_uavs));
    w.ledgers.resize(static_cast<size_t>(cfg.num_uavs));
    for (int k = 0; k < cfg.num_uavs; ++k) {
        w.queues[static_cast<size_t>(k)].owner = k;
        w.ledgers[static_cast<size_t>(k)].uav = k;
    }
    w.initial_energy.assign(static_cast<size_t>(cfg.num_uavs), cfg.battery_j);
    w.coop_events.assign(static_cast<size_t>(cfg.num_uavs),
                         std::vector<double>(static_cast<size_t>(cfg.num_uavs), 0.0));
    return w;
}

// Fresh episode over the same scenario: same placement and hardware, reset
// batteries, queues and cooperation history. The environment RNG continues
// so arrivals differ between episodes.
inline void reset_episode(WorldState& w) {
    const auto& cfg = w.cfg;
    WorldState fresh = generate_scenario(cfg);
    for (size_t k = 0; k < w.uavs.size(); ++k) {
        w.uavs[k] = fresh.uavs[k];
    }
    for (auto& d : w.devices) d.queue.clear();
    for (auto& q : w.queues) q.entries.clear();
    for (auto& l : w.ledgers) {
        int id = l.uav;
        l = EnergyLedger{};
        l.uav = id;
    }
    for (auto& row : w.coop_events)
        for (auto& v : row) v = 0.0;
    w.clock = 0.0;
    w.step_count = 0;
}

}  // namespace airfed
