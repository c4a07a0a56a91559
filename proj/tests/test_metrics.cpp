#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "airfed/metrics.hpp"

using namespace airfed;

TEST(Normalize, SpecExamples) {
    EXPECT_DOUBLE_EQ(metrics::normalize(1.0, 1.0, 5.0), 0.0);
    EXPECT_DOUBLE_EQ(metrics::normalize(5.0, 1.0, 5.0), 1.0);
    EXPECT_DOUBLE_EQ(metrics::normalize(2.0, 1.0, 5.0), 0.25);
    // Collapsed range guarded by epsilon, clamped to [0,1].
    EXPECT_DOUBLE_EQ(metrics::normalize(3.0, 3.0, 3.0), 0.0);
    EXPECT_DOUBLE_EQ(metrics::normalize(9.0, 1.0, 5.0), 1.0);
}

TEST(WeightedCost, SpecExamples) {
    EXPECT_DOUBLE_EQ(metrics::weighted_cost(0.0, 0.0, 0.5, 0.5), 0.0);
    EXPECT_DOUBLE_EQ(metrics::weighted_cost(0.2, 0.4, 0.5, 0.5), 0.3);
    EXPECT_DOUBLE_EQ(metrics::weighted_cost(0.7, 0.9, 1.0, 0.0), 0.7);
}

TEST(WeightedCost, MonotoneInEachArgument) {
    double base = metrics::weighted_cost(0.3, 0.4, 0.5, 0.5);
    EXPECT_GT(metrics::weighted_cost(0.4, 0.4, 0.5, 0.5), base);
    EXPECT_GT(metrics::weighted_cost(0.3, 0.5, 0.5, 0.5), base);
}

TEST(RunningMinMax, NeverContracts) {
    RunningMinMax mm;
    mm.update(5.0, 100.0);
    mm.update(3.0, 150.0);
    mm.update(7.0, 120.0);
    EXPECT_DOUBLE_EQ(mm.min_time, 3.0);
    EXPECT_DOUBLE_EQ(mm.max_time, 7.0);
    EXPECT_DOUBLE_EQ(mm.min_energy, 100.0);
    EXPECT_DOUBLE_EQ(mm.max_energy, 150.0);
    mm.update(5.0, 120.0);
    EXPECT_DOUBLE_EQ(mm.min_time, 3.0);
    EXPECT_DOUBLE_EQ(mm.max_time, 7.0);
}

TEST(QosRates, Conventions) {
    bool flag = false;
    auto [dr0, cr0] = qos_rates(0, 0, 0.0, 0, 4, &flag);
    EXPECT_DOUBLE_EQ(dr0, 1.0);  // zero tasks -> 1 by convention, flagged
    EXPECT_TRUE(flag);
    auto [dr, cr] = qos_rates(10, 9, 0.0, 0, 4);
    EXPECT_DOUBLE_EQ(dr, 0.9);
    // All devices always covered -> coverage 1.
    auto [dr2, cr2] = qos_rates(10, 10, 4.0 * 7, 7, 4);
    EXPECT_DOUBLE_EQ(cr2, 1.0);
    (void)cr0;
    (void)cr;
    (void)dr2;
}

namespace {

MetricsSink fill_sink(int episodes) {
    MetricsSink sink;
    RunningMinMax mm;
    RewardWeights rw;
    for (int e = 0; e < episodes; ++e) {
        sink.begin_episode(e, 77);
        sink.record_generated(3);
        for (int i = 0; i < 3; ++i) {
            PathRecord r;
            r.task_id = e * 10 + i;
            r.origin_device = i;
            r.path = {0};
            r.t_total = 1.0 + 0.1 * e;
            r.deadline_s = 5.0;
            r.met_deadline = true;
            sink.record_outcome(r);
        }
        sink.record_coverage_sample(3);
        sink.record_fl_bytes(1000.0 * e);
        std::vector<EnergyLedger> ledgers(2);
        for (auto& l : ledgers) l.e_total = 100.0 + e;
        sink.end_episode(ledgers, 4, mm, rw);
    }
    return sink;
}

std::string slurp(const std::string& path) {
    std::ifstream is(path);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Export, EmptyRunGivesHeaderOnlyCsv) {
    MetricsSink sink;
    auto dir = std::filesystem::temp_directory_path() / "airfed_metrics_empty";
    std::filesystem::create_directories(dir);
    metrics::export_episodes_csv(sink, (dir / "episodes.csv").string());
    std::string content = slurp((dir / "episodes.csv").string());
    EXPECT_EQ(content.find("episode,seed"), 0u);
    EXPECT_EQ(std::count(content.begin(), content.end(), '\n'), 1);
}

TEST(Export, DeterministicBytes) {
    auto dir1 = std::filesystem::temp_directory_path() / "airfed_metrics_a";
    auto dir2 = std::filesystem::temp_directory_path() / "airfed_metrics_b";
    SimConfig cfg;
    MetricsSink s1 = fill_sink(5);
    MetricsSink s2 = fill_sink(5);
    metrics::export_all(s1, cfg, dir1.string());
    metrics::export_all(s2, cfg, dir2.string());
    for (const char* f : {"episodes.csv", "tasks.csv", "uav_energy.csv", "long_metrics.csv",
                          "summary.json"}) {
        EXPECT_EQ(slurp((dir1 / f).string()), slurp((dir2 / f).string())) << f;
    }
}

TEST(Export, RowCountsMatchEpisodes) {
    auto dir = std::filesystem::temp_directory_path() / "airfed_metrics_rows";
    MetricsSink sink = fill_sink(7);
    SimConfig cfg;
    metrics::export_all(sink, cfg, dir.string());
    std::string content = slurp((dir / "episodes.csv").string());
    EXPECT_EQ(std::count(content.begin(), content.end(), '\n'), 8);  // header + 7
}

TEST(EpisodeMetrics, EnergyMatchesLedgerMean) {
    MetricsSink sink;
    RunningMinMax mm;
    RewardWeights rw;
    sink.begin_episode(0, 1);
    sink.record_generated(0);
    std::vector<EnergyLedger> ledgers(3);
    ledgers[0].e_total = 90.0;
    ledgers[1].e_total = 110.0;
    ledgers[2].e_total = 100.0;
    auto m = sink.end_episode(ledgers, 4, mm, rw);
    EXPECT_DOUBLE_EQ(m.f_energy, 100.0);
    EXPECT_TRUE(m.zero_task_flag);
}
