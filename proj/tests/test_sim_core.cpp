#include <gtest/gtest.h>

#include "airfed/scenario.hpp"
#include "airfed/sim.hpp"
#include "airfed/world.hpp"

using namespace airfed;

TEST(ClipVelocity, SpecExamples) {
    Vec2 a = clip_velocity({3, 4}, 20.0);
    EXPECT_DOUBLE_EQ(a.x, 3.0);
    EXPECT_DOUBLE_EQ(a.y, 4.0);
    // Norm 50 scaled down to 20.
    Vec2 b = clip_velocity({30, 40}, 20.0);
    EXPECT_NEAR(b.x, 12.0, 1e-12);
    EXPECT_NEAR(b.y, 16.0, 1e-12);
    Vec2 c = clip_velocity({0, 0}, 20.0);
    EXPECT_DOUBLE_EQ(c.norm(), 0.0);
}

TEST(UpdatePosition, SpecExamples) {
    UavState u;
    u.pos = {0, 0, 100};
    u.vel = {0, 0};
    update_position(u, 1.0, 1000.0);
    EXPECT_DOUBLE_EQ(u.pos.x, 0.0);
    EXPECT_DOUBLE_EQ(u.pos.z, 100.0);

    u.pos = {10, 20, 100};
    u.vel = {2, -1};
    update_position(u, 2.0, 1000.0);
    EXPECT_DOUBLE_EQ(u.pos.x, 14.0);
    EXPECT_DOUBLE_EQ(u.pos.y, 18.0);
    EXPECT_DOUBLE_EQ(u.pos.z, 100.0);

    // Wall clamp zeroes the offending velocity component.
    u.pos = {999, 0, 100};
    u.vel = {5, 0};
    update_position(u, 1.0, 1000.0);
    EXPECT_DOUBLE_EQ(u.pos.x, 1000.0);
    EXPECT_DOUBLE_EQ(u.vel.x, 0.0);
}

TEST(AdaptiveUpdateInterval, SpecExamples) {
    EXPECT_DOUBLE_EQ(adaptive_update_interval({0, 0}, 1.0, 0.1), 1.0);
    EXPECT_DOUBLE_EQ(adaptive_update_interval({10, 0}, 1.0, 0.1), 0.5);
    EXPECT_NEAR(adaptive_update_interval({0, 20}, 1.0, 0.1), 1.0 / 3.0, 1e-15);
}

TEST(SpawnTasks, ZeroRateAndDeterminism) {
    TaskRanges r;
    IotDevice d;
    d.id = 0;
    d.rate_hz = 0.0;
    long id = 0;
    Rng rng(7);
    EXPECT_TRUE(spawn_tasks(d, 1.0, r, 0.0, id, rng).empty());

    d.rate_hz = 0.5;
    long id1 = 0, id2 = 0;
    Rng r1(42), r2(42);
    for (int i = 0; i < 100; ++i) {
        auto a = spawn_tasks(d, 1.0, r, i, id1, r1);
        auto b = spawn_tasks(d, 1.0, r, i, id2, r2);
        ASSERT_EQ(a.size(), b.size());
        for (size_t j = 0; j < a.size(); ++j) {
            EXPECT_DOUBLE_EQ(a[j].cycles, b[j].cycles);
            EXPECT_DOUBLE_EQ(a[j].deadline_s, b[j].deadline_s);
        }
    }
}

TEST(SpawnTasks, EmpiricalPoissonMean) {
    TaskRanges r;
    IotDevice d;
    d.id = 0;
    d.rate_hz = 0.5;
    long id = 0;
    Rng rng(12345);
    long total = 0;
    const int steps = 100000;
    for (int i = 0; i < steps; ++i) total += static_cast<long>(spawn_tasks(d, 1.0, r, i, id, rng).size());
    double mean = static_cast<double>(total) / steps;
    EXPECT_NEAR(mean, 0.5, 0.01);
}

TEST(SpawnTasks, AttributesWithinRanges) {
    TaskRanges r;
    IotDevice d;
    d.id = 0;
    d.rate_hz = 2.0;
    long id = 0;
    Rng rng(9);
    for (int i = 0; i < 2000; ++i) {
        for (const auto& t : spawn_tasks(d, 1.0, r, i, id, rng)) {
            EXPECT_GE(t.cycles, r.cycles_lo);
            EXPECT_LE(t.cycles, r.cycles_hi);
            EXPECT_GE(t.in_bytes, r.in_bytes_lo);
            EXPECT_LE(t.in_bytes, r.in_bytes_hi);
            EXPECT_GE(t.out_bytes, r.out_bytes_lo);
            EXPECT_LE(t.out_bytes, r.out_bytes_hi);
            EXPECT_GE(t.deadline_s, r.deadline_lo);
            EXPECT_LE(t.deadline_s, r.deadline_hi);
            EXPECT_GT(t.cycles, 0.0);
        }
    }
}

TEST(IotDevice, MostUrgentDeadlineTracksQueue) {
    IotDevice d;
    d.id = 0;
    EXPECT_TRUE(std::isinf(d.most_urgent_deadline(5.0)));
    Task a;
    a.deadline_s = 10.0;
    a.created_at = 0.0;
    Task b;
    b.deadline_s = 4.0;
    b.created_at = 2.0;
    d.queue.push_back(a);
    d.queue.push_back(b);
    // At t=3: remaining = min(10-3, 4-1) = 3.
    EXPECT_DOUBLE_EQ(d.most_urgent_deadline(3.0), 3.0);
    d.queue.pop_back();
    EXPECT_DOUBLE_EQ(d.most_urgent_deadline(3.0), 7.0);
}

TEST(ConfigValidation, DtAccelerationCheck) {
    SimConfig c;
    c.dt = 1.0;  // floor is 2*20/5 = 8 s
    auto r = validate(c);
    EXPECT_TRUE(r.ok());
    EXPECT_FALSE(r.warnings.empty());
    c.dt_strict = true;
    EXPECT_FALSE(validate(c).ok());
    c.dt = 8.0;
    EXPECT_TRUE(validate(c).ok());
    EXPECT_TRUE(validate(c).warnings.empty());
}

namespace {

SimConfig small_cfg() {
    SimConfig cfg;
    cfg.num_uavs = 2;
    cfg.num_devices = 3;
    cfg.area_m = 500.0;
    cfg.rng_seed = 11;
    return cfg;
}

StepActions hover_actions(int K) {
    StepActions a;
    a.velocity.assign(K, Vec2{0, 0});
    a.chooser = [](int, const Task&, const std::vector<int>&, const std::vector<bool>&) {
        return 0;  // always local
    };
    return a;
}

}  // namespace

TEST(StepWorld, HoverOnlyDebitsHoverEnergy) {
    WorldState w = generate_scenario(small_cfg());
    for (auto& d : w.devices) d.rate_hz = 0.0;
    auto out = step_world(w, hover_actions(2));
    EXPECT_TRUE(out.completed.empty());
    for (int k = 0; k < 2; ++k) {
        EXPECT_NEAR(out.energy_step[k], w.cfg.energy.hover_w * w.cfg.dt, 1e-9);
        EXPECT_NEAR(w.ledgers[k].e_trajectory, 80.0, 1e-9);
        EXPECT_DOUBLE_EQ(w.ledgers[k].e_uplink, 0.0);
    }
}

TEST(StepWorld, SingleArrivalLocalProcessingProducesRecord) {
    WorldState w = generate_scenario(small_cfg());
    for (auto& d : w.devices) d.rate_hz = 0.0;
    // Stage one task at device 0, as if it arrived during the previous step.
    Task t;
    t.id = w.next_task_id++;
    t.origin_device = 0;
    t.cycles = 100e6;
    t.in_bytes = 1e6;
    t.out_bytes = 0.2e6;
    t.deadline_s = 10.0;
    t.created_at = 0.0;
    w.devices[0].queue.push_back(t);

    auto out = step_world(w, hover_actions(2));
    ASSERT_EQ(out.completed.size(), 1u);
    EXPECT_EQ(out.completed[0].hops(), 1);
    EXPECT_GT(out.completed[0].t_total, 0.0);
    // Executor picked up the load.
    int exec = out.completed[0].path.back();
    EXPECT_GT(w.ledgers[exec].e_process, 0.0);
}

TEST(StepWorld, DepletionDeactivatesAtStepEnd) {
    WorldState w = generate_scenario(small_cfg());
    for (auto& d : w.devices) d.rate_hz = 0.0;
    w.uav(0).energy_j = 10.0;  // below one hover-step cost (80 J)
    auto out = step_world(w, hover_actions(2));
    EXPECT_FALSE(w.uav(0).active);
    EXPECT_DOUBLE_EQ(w.uav(0).energy_j, 0.0);
    EXPECT_TRUE(w.uav(1).active);
    // Ledger never exceeds what the battery actually had.
    EXPECT_NEAR(w.ledgers[0].e_total, 10.0, 1e-12);
    EXPECT_EQ(w.audit.energy_budget, 0);
    (void)out;
}

TEST(StepWorld, InactiveUavActionsAreCountedAndIgnored) {
    WorldState w = generate_scenario(small_cfg());
    for (auto& d : w.devices) d.rate_hz = 0.0;
    w.uav(0).active = false;
    w.uav(0).energy_j = 0.0;
    auto a = hover_actions(2);
    a.velocity[0] = Vec2{5, 5};
    step_world(w, a);
    EXPECT_EQ(w.audit.inactive_actions, 1);
    EXPECT_DOUBLE_EQ(w.uav(0).vel.norm(), 0.0);
}

TEST(StepWorld, ClockIsExactMultipleOfDt) {
    WorldState w = generate_scenario(small_cfg());
    for (int i = 0; i < 300; ++i) {
        double before = w.clock;
        step_world(w, hover_actions(2));
        EXPECT_DOUBLE_EQ(w.clock - before, w.cfg.dt);
    }
    EXPECT_DOUBLE_EQ(w.clock, 300.0);
}

TEST(StepWorld, InvariantsOverRandomActionEpisode) {
    SimConfig cfg = small_cfg();
    cfg.rng_seed = 99;
    WorldState w = generate_scenario(cfg);
    Rng act_rng(5);
    std::vector<double> prev_energy(2, cfg.battery_j);
    for (int i = 0; i < 300; ++i) {
        StepActions a = hover_actions(2);
        for (int k = 0; k < 2; ++k)
            a.velocity[k] = Vec2{act_rng.uniform(-30, 30), act_rng.uniform(-30, 30)};
        step_world(w, a);
        for (int k = 0; k < 2; ++k) {
            EXPECT_LE(w.uav(k).vel.norm(), cfg.v_max + 1e-12);
            EXPECT_GE(w.uav(k).energy_j, 0.0);
            EXPECT_LE(w.uav(k).energy_j, prev_energy[k] + 1e-12);
            prev_energy[k] = w.uav(k).energy_j;
            EXPECT_GE(w.uav(k).pos.x, 0.0);
            EXPECT_LE(w.uav(k).pos.x, cfg.area_m);
        }
    }
    EXPECT_EQ(w.audit.hard_total(), 0);
}

TEST(StepWorld, DeterministicTrajectory) {
    auto run = [] {
        SimConfig cfg = small_cfg();
        cfg.rng_seed = 31337;
        WorldState w = generate_scenario(cfg);
        Rng act_rng(17);
        for (int i = 0; i < 100; ++i) {
            StepActions a = hover_actions(2);
            for (int k = 0; k < 2; ++k)
                a.velocity[k] = Vec2{act_rng.uniform(-20, 20), act_rng.uniform(-20, 20)};
            step_world(w, a);
        }
        return w;
    };
    WorldState w1 = run();
    WorldState w2 = run();
    for (int k = 0; k < 2; ++k) {
        EXPECT_EQ(w1.uav(k).pos.x, w2.uav(k).pos.x);
        EXPECT_EQ(w1.uav(k).energy_j, w2.uav(k).energy_j);
        EXPECT_EQ(w1.ledgers[k].e_total, w2.ledgers[k].e_total);
    }
    EXPECT_EQ(w1.next_task_id, w2.next_task_id);
}
