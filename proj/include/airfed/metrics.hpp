#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "airfed/config.hpp"
#include "airfed/energy.hpp"
#include "airfed/tasking.hpp"

namespace airfed {

namespace metrics {

// Min-max normalization denominators are guarded against collapse.
constexpr double kNormEps = 1e-9;

inline double normalize(double value, double lo, double hi) {
    double denom = std::max(hi - lo, kNormEps);
    return clamp((value - lo) / denom, 0.0, 1.0);
}

inline double weighted_cost(double norm_time, double norm_energy, double alpha, double beta) {
    return alpha * norm_time + beta * norm_energy;
}

}  // namespace metrics

// Running extrema across the episodes of a run; never contract.
struct RunningMinMax {
    double min_time = 0.0, max_time = 0.0;
    double min_energy = 0.0, max_energy = 0.0;
    bool seen = false;

    void update(double f_time, double f_energy) {
        if (!seen) {
            min_time = max_time = f_time;
            min_energy = max_energy = f_energy;
            seen = true;
            return;
        }
        min_time = std::min(min_time, f_time);
        max_time = std::max(max_time, f_time);
        min_energy = std::min(min_energy, f_energy);
        max_energy = std::max(max_energy, f_energy);
    }
};

struct EpisodeMetrics {
    int episode = 0;
    uint64_t seed = 0;
    double f_time = 0.0;          // mean completion time over completed tasks
    double f_energy = 0.0;        // mean per-UAV energy
    double norm_time = 0.0;
    double norm_energy = 0.0;
    double weighted_cost = 0.0;
    double deadline_rate = 0.0;
    double coverage_rate = 0.0;
    double fl_bytes_per_uav = 0.0;
    long tasks_generated = 0;
    long tasks_completed = 0;
    long tasks_met = 0;
    long failed_admissions = 0;
    double mean_reward = 0.0;
    double loss_vel = 0.0;
    double loss_off = 0.0;
    double loss_critic = 0.0;
    bool zero_task_flag = false;  // deadline_rate defaulted to 1 with no tasks
};

// Deadline satisfaction over all generated tasks (failures count as misses)
// and time-averaged fraction of devices covered by at least one UAV.
inline std::pair<double, double> qos_rates(long generated, long met, double coverage_accum,
                                           long coverage_samples, int num_devices,
                                           bool* zero_flag = nullptr) {
    double deadline_rate = 1.0;
    if (generated > 0) deadline_rate = static_cast<double>(met) / static_cast<double>(generated);
    else if (zero_flag) *zero_flag = true;
    double coverage_rate = coverage_samples > 0
        ? coverage_accum / (static_cast<double>(coverage_samples) * num_devices)
        : 0.0;
    return {deadline_rate, coverage_rate};
}

// Single-writer per-run collector. Per-episode scratch is folded into an
// EpisodeMetrics row by end_episode().
class MetricsSink {
public:
    MetricsSink() = default;

    void begin_episode(int episode, uint64_t seed) {
        episode_ = episode;
        seed_ = seed;
        records_.clear();
        record_index_.clear();
        generated_ = 0;
        failed_admissions_ = 0;
        coverage_accum_ = 0.0;
        coverage_samples_ = 0;
        fl_bytes_ = 0.0;
        reward_sum_ = 0.0;
        reward_samples_ = 0;
        loss_vel_sum_ = loss_off_sum_ = loss_critic_sum_ = 0.0;
        loss_samples_ = 0;
    }

    void record_outcome(const PathRecord& rec) {
        record_index_[rec.task_id] = records_.size();
        records_.push_back(rec);
    }

    void record_failed_admission(const Task&) { ++failed_admissions_; }
    void record_generated(long n) { generated_ += n; }

    // Depleted-UAV cleanup: a previously admitted task is retroactively
    // marked as a deadline violation.
    void invalidate_task(long task_id) {
        auto it = record_index_.find(task_id);
        if (it != record_index_.end()) records_[it->second].met_deadline = false;
    }

    void record_coverage_sample(int devices_covered) {
        coverage_accum_ += devices_covered;
        ++coverage_samples_;
    }

    void record_fl_bytes(double bytes) { fl_bytes_ += bytes; }
    void record_reward(double r) { reward_sum_ += r; ++reward_samples_; }
    void record_losses(double lv, double lo, double lc) {
        loss_vel_sum_ += lv;
        loss_off_sum_ += lo;
        loss_critic_sum_ += lc;
        ++loss_samples_;
    }

    EpisodeMetrics end_episode(const std::vector<EnergyLedger>& ledgers, int num_devices,
                               RunningMinMax& extrema, const RewardWeights& rw) {
        EpisodeMetrics m;
        m.episode = episode_;
        m.seed = seed_;
        m.tasks_generated = generated_;
        m.tasks_completed = static_cast<long>(records_.size());
        m.failed_admissions = failed_admissions_;
        double t_sum = 0.0;
        long met = 0;
        for (const auto& r : records_) {
            t_sum += r.t_total;
            if (r.met_deadline) ++met;
        }
        m.tasks_met = met;
        m.f_time = records_.empty() ? 0.0 : t_sum / static_cast<double>(records_.size());
        double e_sum = 0.0;
        for (const auto& l : ledgers) e_sum += l.e_total;
        m.f_energy = ledgers.empty() ? 0.0 : e_sum / static_cast<double>(ledgers.size());

        extrema.update(m.f_time, m.f_energy);
        m.norm_time = metrics::normalize(m.f_time, extrema.min_time, extrema.max_time);
        m.norm_energy = metrics::normalize(m.f_energy, extrema.min_energy, extrema.max_energy);
        m.weighted_cost = metrics::weighted_cost(m.norm_time, m.norm_energy, rw.alpha_time,
                                                 rw.beta_energy);

        auto [dr, cr] = qos_rates(generated_, met, coverage_accum_, coverage_samples_,
                                  num_devices, &m.zero_task_flag);
        m.deadline_rate = dr;
        m.coverage_rate = cr;
        m.fl_bytes_per_uav = ledgers.empty() ? 0.0 : fl_bytes_ / static_cast<double>(ledgers.size());
        m.mean_reward = reward_samples_ ? reward_sum_ / reward_samples_ : 0.0;
        if (loss_samples_) {
            m.loss_vel = loss_vel_sum_ / loss_samples_;
            m.loss_off = loss_off_sum_ / loss_samples_;
            m.loss_critic = loss_critic_sum_ / loss_samples_;
        }
        episodes_.push_back(m);
        episode_records_.push_back(records_);
        episode_ledgers_.push_back(ledgers);
        return m;
    }

    const std::vector<EpisodeMetrics>& episodes() const { return episodes_; }
    const std::vector<std::vector<PathRecord>>& episode_records() const { return episode_records_; }
    const std::vector<std::vector<EnergyLedger>>& episode_ledgers() const { return episode_ledgers_; }

private:
    int episode_ = 0;
    uint64_t seed_ = 0;
    std::vector<PathRecord> records_;
    std::map<long, size_t> record_index_;
    long generated_ = 0;
    long failed_admissions_ = 0;
    double coverage_accum_ = 0.0;
    long coverage_samples_ = 0;
    double fl_bytes_ = 0.0;
    double reward_sum_ = 0.0;
    long reward_samples_ = 0;
    double loss_vel_sum_ = 0.0, loss_off_sum_ = 0.0, loss_critic_sum_ = 0.0;
    long loss_samples_ = 0;

    std::vector<EpisodeMetrics> episodes_;
    std::vector<std::vector<PathRecord>> episode_records_;
    std::vector<std::vector<EnergyLedger>> episode_ledgers_;
};

// --- export -------------------------------------------------------------------

namespace metrics {

// Fixed float formatting keeps output files byte-stable across runs.
inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

inline std::string path_to_string(const std::vector<int>& p) {
    std::string s;
    for (size_t i = 0; i < p.size(); ++i) {
        if (i) s += '|';
        s += std::to_string(p[i]);
    }
    return s;
}

inline void export_episodes_csv(const MetricsSink& sink, const std::string& file) {
    std::ofstream os(file);
    if (!os) throw SimError("cannot open " + file);
    os << "episode,seed,f_time_s,f_energy_j,norm_time,norm_energy,weighted_cost,"
          "deadline_rate,coverage_rate,fl_bytes_per_uav,tasks_generated,tasks_completed,"
          "tasks_met,failed_admissions,mean_reward,loss_vel,loss_off,loss_critic,zero_task_flag\n";
    for (const auto& m : sink.episodes()) {
        os << m.episode << ',' << m.seed << ',' << fmt(m.f_time) << ',' << fmt(m.f_energy) << ','
           << fmt(m.norm_time) << ',' << fmt(m.norm_energy) << ',' << fmt(m.weighted_cost) << ','
           << fmt(m.deadline_rate) << ',' << fmt(m.coverage_rate) << ','
           << fmt(m.fl_bytes_per_uav) << ',' << m.tasks_generated << ',' << m.tasks_completed
           << ',' << m.tasks_met << ',' << m.failed_admissions << ',' << fmt(m.mean_reward) << ','
           << fmt(m.loss_vel) << ',' << fmt(m.loss_off) << ',' << fmt(m.loss_critic) << ','
           << (m.zero_task_flag ? 1 : 0) << '\n';
    }
}

inline void export_tasks_csv(const MetricsSink& sink, const std::string& file) {
    std::ofstream os(file);
    if (!os) throw SimError("cannot open " + file);
    os << "episode,task_id,origin_device,path,hops,created_at,admitted_at,t_uplink,t_decision,"
          "t_forward,t_queue,t_compute,t_return,t_downlink,t_total,deadline_s,met_deadline\n";
    int ep = 0;
    for (const auto& recs : sink.episode_records()) {
        for (const auto& r : recs) {
            os << sink.episodes()[ep].episode << ',' << r.task_id << ',' << r.origin_device << ','
               << path_to_string(r.path) << ',' << r.hops() << ',' << fmt(r.created_at) << ','
               << fmt(r.admitted_at) << ',' << fmt(r.t_uplink) << ',' << fmt(r.t_decision) << ','
               << fmt(r.t_forward) << ',' << fmt(r.t_queue) << ',' << fmt(r.t_compute) << ','
               << fmt(r.t_return) << ',' << fmt(r.t_downlink) << ',' << fmt(r.t_total) << ','
               << fmt(r.deadline_s) << ',' << (r.met_deadline ? 1 : 0) << '\n';
        }
        ++ep;
    }
}

inline void export_uav_energy_csv(const MetricsSink& sink, const std::string& file) {
    std::ofstream os(file);
    if (!os) throw SimError("cannot open " + file);
    os << "episode,uav,e_trajectory,e_uplink,e_decision,e_forward,e_process,e_return,"
          "e_downlink,e_comm_fl,e_total\n";
    int ep = 0;
    for (const auto& ledgers : sink.episode_ledgers()) {
        for (const auto& l : ledgers) {
            os << sink.episodes()[ep].episode << ',' << l.uav << ',' << fmt(l.e_trajectory) << ','
               << fmt(l.e_uplink) << ',' << fmt(l.e_decision) << ',' << fmt(l.e_forward) << ','
               << fmt(l.e_process) << ',' << fmt(l.e_return) << ',' << fmt(l.e_downlink) << ','
               << fmt(l.e_comm_fl) << ',' << fmt(l.e_total) << '\n';
        }
        ++ep;
    }
}

// Long format, one (episode, metric, value) row per line; plot-ready.
inline void export_long_csv(const MetricsSink& sink, const std::string& file) {
    std::ofstream os(file);
    if (!os) throw SimError("cannot open " + file);
    os << "episode,seed,metric,value\n";
    for (const auto& m : sink.episodes()) {
        auto row = [&](const char* name, double v) {
            os << m.episode << ',' << m.seed << ',' << name << ',' << fmt(v) << '\n';
        };
        row("f_time_s", m.f_time);
        row("f_energy_j", m.f_energy);
        row("weighted_cost", m.weighted_cost);
        row("deadline_rate", m.deadline_rate);
        row("coverage_rate", m.coverage_rate);
        row("fl_mb_per_uav", m.fl_bytes_per_uav / 1e6);
    }
}

inline void export_summary_json(const MetricsSink& sink, const SimConfig& cfg,
                                const std::string& file) {
    json j;
    j["config_hash"] = config_hash(cfg);
    j["seed"] = cfg.rng_seed;
    j["episodes"] = sink.episodes().size();
    if (!sink.episodes().empty()) {
        double wc = 0, dr = 0, cr = 0, fe = 0, ft = 0;
        for (const auto& m : sink.episodes()) {
            wc += m.weighted_cost;
            dr += m.deadline_rate;
            cr += m.coverage_rate;
            fe += m.f_energy;
            ft += m.f_time;
        }
        double n = static_cast<double>(sink.episodes().size());
        j["mean_weighted_cost"] = wc / n;
        j["mean_deadline_rate"] = dr / n;
        j["mean_coverage_rate"] = cr / n;
        j["mean_f_energy_j"] = fe / n;
        j["mean_f_time_s"] = ft / n;
    }
    std::ofstream os(file);
    if (!os) throw SimError("cannot open " + file);
    os << j.dump(2) << '\n';
}

inline void export_all(const MetricsSink& sink, const SimConfig& cfg, const std::string& dir) {
    std::filesystem::create_directories(dir);
    export_episodes_csv(sink, dir + "/episodes.csv");
    export_tasks_csv(sink, dir + "/tasks.csv");
    export_uav_energy_csv(sink, dir + "/uav_energy.csv");
    export_long_csv(sink, dir + "/long_metrics.csv");
    export_summary_json(sink, cfg, dir + "/summary.json");
}

}  // namespace metrics

inline void record_outcome(const PathRecord& rec, MetricsSink& sink) { sink.record_outcome(rec); }

}  // namespace airfed
