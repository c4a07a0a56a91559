#include <gtest/gtest.h>

#include "airfed/scenario.hpp"

using namespace airfed;

TEST(KMeans, AllPointsCoincidentCollapsesCentroids) {
    std::vector<Vec2> pts(6, Vec2{100, 200});
    Rng rng(1);
    auto c = scenario::kmeans(pts, 3, rng);
    ASSERT_EQ(c.size(), 3u);
    for (const auto& v : c) {
        EXPECT_DOUBLE_EQ(v.x, 100.0);
        EXPECT_DOUBLE_EQ(v.y, 200.0);
    }
}

TEST(KMeans, SingleClusterIsMean) {
    std::vector<Vec2> pts{{0, 0}, {10, 0}, {0, 10}, {10, 10}};
    Rng rng(1);
    auto c = scenario::kmeans(pts, 1, rng);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_DOUBLE_EQ(c[0].x, 5.0);
    EXPECT_DOUBLE_EQ(c[0].y, 5.0);
}

TEST(KMeans, MoreCentroidsThanPointsPadsWithDuplicates) {
    std::vector<Vec2> pts{{1, 1}, {9, 9}};
    Rng rng(3);
    auto c = scenario::kmeans(pts, 4, rng);
    ASSERT_EQ(c.size(), 4u);
    for (const auto& v : c) {
        bool at_point = (v.x == 1 && v.y == 1) || (v.x == 9 && v.y == 9);
        EXPECT_TRUE(at_point);
    }
}

TEST(GenerateScenario, DeterministicAcrossCalls) {
    SimConfig cfg = desk_profile();
    cfg.rng_seed = 4242;
    WorldState a = generate_scenario(cfg);
    WorldState b = generate_scenario(cfg);
    ASSERT_EQ(a.uavs.size(), b.uavs.size());
    for (size_t k = 0; k < a.uavs.size(); ++k) {
        EXPECT_EQ(a.uav(k).pos.x, b.uav(k).pos.x);
        EXPECT_EQ(a.uav(k).pos.z, b.uav(k).pos.z);
        EXPECT_EQ(a.uav(k).cpu_hz, b.uav(k).cpu_hz);
    }
    for (size_t m = 0; m < a.devices.size(); ++m) {
        EXPECT_EQ(a.devices[m].loc.x, b.devices[m].loc.x);
        EXPECT_EQ(a.devices[m].rate_hz, b.devices[m].rate_hz);
    }
}

TEST(GenerateScenario, RespectsConfiguredRanges) {
    SimConfig cfg;
    cfg.num_uavs = 6;
    cfg.num_devices = 40;
    cfg.rng_seed = 7;
    WorldState w = generate_scenario(cfg);
    for (const auto& u : w.uavs) {
        EXPECT_GE(u.pos.z, cfg.altitude_lo);
        EXPECT_LE(u.pos.z, cfg.altitude_hi);
        EXPECT_GE(u.cpu_hz, cfg.cpu_lo_hz);
        EXPECT_LE(u.cpu_hz, cfg.cpu_hi_hz);
        EXPECT_DOUBLE_EQ(u.energy_j, cfg.battery_j);
        EXPECT_GE(u.pos.x, 0.0);
        EXPECT_LE(u.pos.x, cfg.area_m);
        EXPECT_TRUE(u.active);
    }
    for (const auto& d : w.devices) {
        EXPECT_GE(d.rate_hz, cfg.tasks.rate_lo);
        EXPECT_LE(d.rate_hz, cfg.tasks.rate_hi);
    }
}

TEST(ResetEpisode, RestoresPositionsKeepsArrivalStream) {
    SimConfig cfg = desk_profile();
    cfg.rng_seed = 11;
    WorldState w = generate_scenario(cfg);
    auto pos0 = w.uav(0).pos;
    // Perturb and reset.
    w.uav(0).pos.x += 50;
    w.uav(0).energy_j = 1.0;
    w.uav(0).active = false;
    w.ledgers[0].e_total = 123.0;
    double draw_before = w.env_rng.uniform();
    reset_episode(w);
    EXPECT_EQ(w.uav(0).pos.x, pos0.x);
    EXPECT_DOUBLE_EQ(w.uav(0).energy_j, cfg.battery_j);
    EXPECT_TRUE(w.uav(0).active);
    EXPECT_DOUBLE_EQ(w.ledgers[0].e_total, 0.0);
    EXPECT_DOUBLE_EQ(w.clock, 0.0);
    // Env stream continues: the next draw differs from a replay.
    double draw_after = w.env_rng.uniform();
    EXPECT_NE(draw_before, draw_after);
}

TEST(ConfigJson, RoundTripAndHashStability) {
    SimConfig cfg = desk_profile();
    cfg.rng_seed = 5;
    json j = to_json(cfg);
    SimConfig back;
    apply_json(back, j);
    EXPECT_EQ(config_hash(cfg), config_hash(back));
    EXPECT_DOUBLE_EQ(back.radio.rssi_min_w, cfg.radio.rssi_min_w);
    EXPECT_EQ(back.num_uavs, 3);

    // Partial override keeps everything else.
    SimConfig c2 = desk_profile();
    apply_json(c2, json{{"num_devices", 12}, {"rssi_min_dbm", -60.0}});
    EXPECT_EQ(c2.num_devices, 12);
    EXPECT_NEAR(c2.radio.rssi_min_w, dbm_to_watts(-60.0), 1e-18);
    EXPECT_EQ(c2.num_uavs, 3);
}
