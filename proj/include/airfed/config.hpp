#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "airfed/common.hpp"

namespace airfed {

using json = nlohmann::json;

// Link-budget constants. Config files carry dB / dBm values; everything is
// converted to linear once at load and stays linear internally.
struct RadioParams {
    double gain_ag = db_to_linear(-30.0);      // air-ground channel gain at 1 m
    double gain_aa = db_to_linear(-20.0);      // air-air channel gain at 1 m
    double bandwidth_ag_hz = 10e6;             // device<->UAV
    double bandwidth_aa_hz = 20e6;             // UAV<->UAV
    double noise_w = dbm_to_watts(-114.0);
    double rssi_min_w = dbm_to_watts(-90.0);   // service coverage threshold
    double rssi_fl_w = dbm_to_watts(-85.0);    // federated-learning link threshold
    double comm_range_m = 400.0;
    double uav_tx_w = 0.5;
    double uav_rx_w = 0.1;
    double dev_tx_w = 0.1;
};

struct EnergyParams {
    double hover_w = 80.0;
    double air_density = 1.225;   // kg/m^3
    double drag_area_m2 = 0.1;
    double drag_coeff = 0.3;
    double cmos_kappa = 1e-28;    // J/(Hz^2 * cycle); see config key kappa_paper_scale
    double cpu_w = 10.0;          // offloading-decision execution power
    double idle_w = 5.0;          // queue-wait power at the executor
};

struct TaskRanges {
    double cycles_lo = 50e6, cycles_hi = 200e6;     // CPU cycles
    double in_bytes_lo = 1e6, in_bytes_hi = 3e6;    // task input payload
    double out_bytes_lo = 0.1e6, out_bytes_hi = 0.5e6;
    double deadline_lo = 5.0, deadline_hi = 20.0;   // seconds
    double rate_lo = 0.3, rate_hi = 0.8;            // tasks/s per device
};

struct RewardWeights {
    double alpha_time = 0.5;
    double beta_energy = 0.5;
    double lambda_deadline = 10.0;
    double eta_coverage = 0.1;
};

struct NetConfig {
    int gat_hidden1 = 128;
    int gat_hidden2 = 64;
    int attention_heads = 4;
    int gru_dim = 128;
    int shared_dim = 128;
    int actor_hidden = 128;     // both actor hidden layers
    int critic_hidden1 = 128;
    int critic_hidden2 = 64;
    double gamma_urg = 0.5;     // urgency weight in the cross-layer transfer
};

struct TrainConfig {
    double lr_vel = 3e-4;
    double lr_off = 3e-4;
    double lr_critic = 5e-4;
    double lr_features = 3e-4;  // GAT/GRU/shared trunk
    double gamma = 0.95;
    double beta_entropy = 0.01;
    int window_steps = 32;      // on-policy update window
    double sigma_min = 1e-3;
    double sigma_init = 1.0;    // initial stddev of the velocity Gaussian
    double grad_clip = 1.0;     // per-network gradient-norm cap; 0 disables
    // Per-step reward normalization scales (performance term).
    double time_scale_s = 20.0;   // worst-case deadline
    double energy_scale_j = 0.0;  // 0 -> derived as flight_power(v_max)*dt at load
};

struct FlConfig {
    bool enabled = true;
    bool reputation_enabled = true;
    bool quantization_enabled = true;
    bool aggregate_feature_nets = true;  // include GAT/GRU/shared in the FL set
    bool count_comm_energy = false;      // debit FL bytes against UAV batteries
    int b_min = 4;
    int b_max = 16;
    double f_base_hz = 0.03;
    double alpha_mobility = 0.05;
    double alpha_succ = 0.6;
    double alpha_stab = 0.4;
    double rho = 0.75;           // reputation forgetting factor
    double timeout_steps = 1.0;  // best-effort window, in world steps
    double drop_prob = 0.0;      // simulated message-loss probability
};

struct SimConfig {
    double area_m = 1000.0;      // square side
    int num_uavs = 6;            // K
    int num_devices = 40;        // M
    double dt = 1.0;
    double dt_base = 1.0;        // graph-refresh base interval
    double alpha_speed = 0.1;    // graph-refresh speed sensitivity
    double episode_len_s = 300.0;
    int episodes = 100;
    uint64_t rng_seed = 1;

    double v_max = 20.0;
    double accel = 5.0;
    double battery_j = 500e3;
    double cpu_lo_hz = 1e9, cpu_hi_hz = 3e9;
    double altitude_lo = 80.0, altitude_hi = 150.0;
    double load_max_cycles = 1e9;
    double decision_time_s = 0.01;
    int max_hops = 3;
    bool dt_strict = false;      // fail (instead of warn) the acceleration check

    RadioParams radio;
    EnergyParams energy;
    TaskRanges tasks;
    RewardWeights reward;
    NetConfig net;
    TrainConfig train;
    FlConfig fl;

    int steps_per_episode() const { return static_cast<int>(episode_len_s / dt + 0.5); }
    double energy_reward_scale() const {
        if (train.energy_scale_j > 0.0) return train.energy_scale_j;
        double drag = 0.5 * energy.air_density * energy.drag_area_m2 * energy.drag_coeff;
        return (energy.hover_w + drag * v_max * v_max * v_max) * dt;
    }
};

// Per-field JSON mapping. Absent keys keep defaults so partial override
// files stay short; dB/dBm keys are the config-facing representation.
inline void apply_json(SimConfig& c, const json& j) {
    auto get = [&](const char* k, auto& dst) {
        if (j.contains(k)) dst = j.at(k).get<std::decay_t<decltype(dst)>>();
    };
    auto get_db = [&](const char* k, double& dst) {
        if (j.contains(k)) dst = db_to_linear(j.at(k).get<double>());
    };
    auto get_dbm = [&](const char* k, double& dst) {
        if (j.contains(k)) dst = dbm_to_watts(j.at(k).get<double>());
    };

    get("area_m", c.area_m);
    get("num_uavs", c.num_uavs);
    get("num_devices", c.num_devices);
    get("dt_s", c.dt);
    get("dt_base_s", c.dt_base);
    get("alpha_speed", c.alpha_speed);
    get("episode_len_s", c.episode_len_s);
    get("episodes", c.episodes);
    get("seed", c.rng_seed);
    get("v_max_mps", c.v_max);
    get("accel_mps2", c.accel);
    get("battery_j", c.battery_j);
    get("cpu_lo_hz", c.cpu_lo_hz);
    get("cpu_hi_hz", c.cpu_hi_hz);
    get("altitude_lo_m", c.altitude_lo);
    get("altitude_hi_m", c.altitude_hi);
    get("load_max_cycles", c.load_max_cycles);
    get("decision_time_s", c.decision_time_s);
    get("max_hops", c.max_hops);
    get("dt_strict", c.dt_strict);

    get_db("gain_ag_db", c.radio.gain_ag);
    get_db("gain_aa_db", c.radio.gain_aa);
    get("bandwidth_ag_hz", c.radio.bandwidth_ag_hz);
    get("bandwidth_aa_hz", c.radio.bandwidth_aa_hz);
    get_dbm("noise_dbm", c.radio.noise_w);
    get_dbm("rssi_min_dbm", c.radio.rssi_min_w);
    get_dbm("rssi_fl_dbm", c.radio.rssi_fl_w);
    get("comm_range_m", c.radio.comm_range_m);
    get("uav_tx_w", c.radio.uav_tx_w);
    get("uav_rx_w", c.radio.uav_rx_w);
    get("dev_tx_w", c.radio.dev_tx_w);

    get("hover_w", c.energy.hover_w);
    get("air_density", c.energy.air_density);
    get("drag_area_m2", c.energy.drag_area_m2);
    get("drag_coeff", c.energy.drag_coeff);
    get("cmos_kappa", c.energy.cmos_kappa);
    get("cpu_w", c.energy.cpu_w);
    get("idle_w", c.energy.idle_w);

    get("task_cycles_lo", c.tasks.cycles_lo);
    get("task_cycles_hi", c.tasks.cycles_hi);
    get("task_in_bytes_lo", c.tasks.in_bytes_lo);
    get("task_in_bytes_hi", c.tasks.in_bytes_hi);
    get("task_out_bytes_lo", c.tasks.out_bytes_lo);
    get("task_out_bytes_hi", c.tasks.out_bytes_hi);
    get("task_deadline_lo_s", c.tasks.deadline_lo);
    get("task_deadline_hi_s", c.tasks.deadline_hi);
    get("device_rate_lo_hz", c.tasks.rate_lo);
    get("device_rate_hi_hz", c.tasks.rate_hi);

    get("reward_alpha_time", c.reward.alpha_time);
    get("reward_beta_energy", c.reward.beta_energy);
    get("deadline_penalty_lambda", c.reward.lambda_deadline);
    get("coverage_reward_eta", c.reward.eta_coverage);

    get("gat_hidden1", c.net.gat_hidden1);
    get("gat_hidden2", c.net.gat_hidden2);
    get("attention_heads", c.net.attention_heads);
    get("gru_dim", c.net.gru_dim);
    get("shared_dim", c.net.shared_dim);
    get("actor_hidden", c.net.actor_hidden);
    get("critic_hidden1", c.net.critic_hidden1);
    get("critic_hidden2", c.net.critic_hidden2);
    get("gamma_urg", c.net.gamma_urg);

    get("lr_vel", c.train.lr_vel);
    get("lr_off", c.train.lr_off);
    get("lr_critic", c.train.lr_critic);
    get("lr_features", c.train.lr_features);
    get("discount_gamma", c.train.gamma);
    get("beta_entropy", c.train.beta_entropy);
    get("window_steps", c.train.window_steps);
    get("sigma_min", c.train.sigma_min);
    get("sigma_init", c.train.sigma_init);
    get("grad_clip", c.train.grad_clip);
    get("reward_time_scale_s", c.train.time_scale_s);
    get("reward_energy_scale_j", c.train.energy_scale_j);

    get("fl_enabled", c.fl.enabled);
    get("fl_reputation", c.fl.reputation_enabled);
    get("fl_quantization", c.fl.quantization_enabled);
    get("fl_aggregate_feature_nets", c.fl.aggregate_feature_nets);
    get("fl_count_comm_energy", c.fl.count_comm_energy);
    get("fl_b_min", c.fl.b_min);
    get("fl_b_max", c.fl.b_max);
    get("fl_f_base_hz", c.fl.f_base_hz);
    get("fl_alpha_mobility", c.fl.alpha_mobility);
    get("fl_alpha_succ", c.fl.alpha_succ);
    get("fl_alpha_stab", c.fl.alpha_stab);
    get("fl_rho", c.fl.rho);
    get("fl_timeout_steps", c.fl.timeout_steps);
    get("fl_drop_prob", c.fl.drop_prob);
}

inline json to_json(const SimConfig& c) {
    json j;
    j["area_m"] = c.area_m;
    j["num_uavs"] = c.num_uavs;
    j["num_devices"] = c.num_devices;
    j["dt_s"] = c.dt;
    j["dt_base_s"] = c.dt_base;
    j["alpha_speed"] = c.alpha_speed;
    j["episode_len_s"] = c.episode_len_s;
    j["episodes"] = c.episodes;
    j["seed"] = c.rng_seed;
    j["v_max_mps"] = c.v_max;
    j["accel_mps2"] = c.accel;
    j["battery_j"] = c.battery_j;
    j["cpu_lo_hz"] = c.cpu_lo_hz;
    j["cpu_hi_hz"] = c.cpu_hi_hz;
    j["altitude_lo_m"] = c.altitude_lo;
    j["altitude_hi_m"] = c.altitude_hi;
    j["load_max_cycles"] = c.load_max_cycles;
    j["decision_time_s"] = c.decision_time_s;
    j["max_hops"] = c.max_hops;
    j["dt_strict"] = c.dt_strict;
    j["gain_ag_db"] = linear_to_db(c.radio.gain_ag);
    j["gain_aa_db"] = linear_to_db(c.radio.gain_aa);
    j["bandwidth_ag_hz"] = c.radio.bandwidth_ag_hz;
    j["bandwidth_aa_hz"] = c.radio.bandwidth_aa_hz;
    j["noise_dbm"] = watts_to_dbm(c.radio.noise_w);
    j["rssi_min_dbm"] = watts_to_dbm(c.radio.rssi_min_w);
    j["rssi_fl_dbm"] = watts_to_dbm(c.radio.rssi_fl_w);
    j["comm_range_m"] = c.radio.comm_range_m;
    j["uav_tx_w"] = c.radio.uav_tx_w;
    j["uav_rx_w"] = c.radio.uav_rx_w;
    j["dev_tx_w"] = c.radio.dev_tx_w;
    j["hover_w"] = c.energy.hover_w;
    j["air_density"] = c.energy.air_density;
    j["drag_area_m2"] = c.energy.drag_area_m2;
    j["drag_coeff"] = c.energy.drag_coeff;
    j["cmos_kappa"] = c.energy.cmos_kappa;
    j["cpu_w"] = c.energy.cpu_w;
    j["idle_w"] = c.energy.idle_w;
    j["task_cycles_lo"] = c.tasks.cycles_lo;
    j["task_cycles_hi"] = c.tasks.cycles_hi;
    j["task_in_bytes_lo"] = c.tasks.in_bytes_lo;
    j["task_in_bytes_hi"] = c.tasks.in_bytes_hi;
    j["task_out_bytes_lo"] = c.tasks.out_bytes_lo;
    j["task_out_bytes_hi"] = c.tasks.out_bytes_hi;
    j["task_deadline_lo_s"] = c.tasks.deadline_lo;
    j["task_deadline_hi_s"] = c.tasks.deadline_hi;
    j["device_rate_lo_hz"] = c.tasks.rate_lo;
    j["device_rate_hi_hz"] = c.tasks.rate_hi;
    j["reward_alpha_time"] = c.reward.alpha_time;
    j["reward_beta_energy"] = c.reward.beta_energy;
    j["deadline_penalty_lambda"] = c.reward.lambda_deadline;
    j["coverage_reward_eta"] = c.reward.eta_coverage;
    j["gat_hidden1"] = c.net.gat_hidden1;
    j["gat_hidden2"] = c.net.gat_hidden2;
    j["attention_heads"] = c.net.attention_heads;
    j["gru_dim"] = c.net.gru_dim;
    j["shared_dim"] = c.net.shared_dim;
    j["actor_hidden"] = c.net.actor_hidden;
    j["critic_hidden1"] = c.net.critic_hidden1;
    j["critic_hidden2"] = c.net.critic_hidden2;
    j["gamma_urg"] = c.net.gamma_urg;
    j["lr_vel"] = c.train.lr_vel;
    j["lr_off"] = c.train.lr_off;
    j["lr_critic"] = c.train.lr_critic;
    j["lr_features"] = c.train.lr_features;
    j["discount_gamma"] = c.train.gamma;
    j["beta_entropy"] = c.train.beta_entropy;
    j["window_steps"] = c.train.window_steps;
    j["sigma_min"] = c.train.sigma_min;
    j["sigma_init"] = c.train.sigma_init;
    j["grad_clip"] = c.train.grad_clip;
    j["reward_time_scale_s"] = c.train.time_scale_s;
    j["reward_energy_scale_j"] = c.train.energy_scale_j;
    j["fl_enabled"] = c.fl.enabled;
    j["fl_reputation"] = c.fl.reputation_enabled;
    j["fl_quantization"] = c.fl.quantization_enabled;
    j["fl_aggregate_feature_nets"] = c.fl.aggregate_feature_nets;
    j["fl_count_comm_energy"] = c.fl.count_comm_energy;
    j["fl_b_min"] = c.fl.b_min;
    j["fl_b_max"] = c.fl.b_max;
    j["fl_f_base_hz"] = c.fl.f_base_hz;
    j["fl_alpha_mobility"] = c.fl.alpha_mobility;
    j["fl_alpha_succ"] = c.fl.alpha_succ;
    j["fl_alpha_stab"] = c.fl.alpha_stab;
    j["fl_rho"] = c.fl.rho;
    j["fl_timeout_steps"] = c.fl.timeout_steps;
    j["fl_drop_prob"] = c.fl.drop_prob;
    return j;
}

// Canonical serialization (sorted keys, fixed precision) -> stable hash.
inline uint64_t config_hash(const SimConfig& c) {
    return fnv1a(to_json(c).dump());
}

struct ConfigCheck {
    std::vector<std::string> warnings;
    std::vector<std::string> errors;
    bool ok() const { return errors.empty(); }
};

inline ConfigCheck validate(const SimConfig& c) {
    ConfigCheck r;
    auto err = [&](const std::string& m) { r.errors.push_back(m); };
    if (c.num_uavs < 1) err("num_uavs must be >= 1");
    if (c.num_devices < 1) err("num_devices must be >= 1");
    if (c.dt <= 0) err("dt_s must be positive");
    if (c.area_m <= 0) err("area_m must be positive");
    if (c.radio.bandwidth_aa_hz < c.radio.bandwidth_ag_hz)
        r.warnings.push_back("inter-UAV bandwidth below air-ground bandwidth");
    if (std::abs(c.reward.alpha_time + c.reward.beta_energy - 1.0) > 1e-9)
        err("reward weights alpha+beta must sum to 1");
    if (c.fl.b_min < 1 || c.fl.b_max > 32 || c.fl.b_min > c.fl.b_max)
        err("bit widths must satisfy 1 <= b_min <= b_max <= 32");

    // Time-discretization check against the acceleration envelope. The paper
    // constants imply dt >= 8 s, which is unusable for per-step control, so
    // by default this is a warning; dt_strict promotes it to an error.
    double dt_floor = 2.0 * c.v_max / c.accel;
    if (c.dt < dt_floor) {
        std::ostringstream os;
        os << "dt_s=" << c.dt << " below acceleration-envelope floor 2*v_max/accel=" << dt_floor;
        if (c.dt_strict) err(os.str());
        else r.warnings.push_back(os.str());
    }
    return r;
}

// Paper-scale deployment profile.
inline SimConfig paper_profile() {
    SimConfig c;
    return c;
}

// Desk-scale profile: small enough for laptop training runs. The service
// threshold is tightened so coverage is an actual constraint at K=3 (with
// the paper thresholds every point of a 1 km^2 area is covered and the
// coverage/deadline metrics saturate for any policy), the area is sized so
// cluster centroids stay within inter-UAV comm range, and the load cap
// absorbs worst-case arrival bursts at a single UAV.
inline SimConfig desk_profile() {
    SimConfig c;
    c.num_uavs = 3;
    c.num_devices = 10;
    c.episodes = 50;
    c.area_m = 600.0;
    c.load_max_cycles = 4e9;
    c.radio.rssi_min_w = dbm_to_watts(-50.0);  // ~224 m slant coverage radius
    c.radio.rssi_fl_w = dbm_to_watts(-48.0);
    return c;
}

inline SimConfig profile_by_name(const std::string& name) {
    if (name == "desk") return desk_profile();
    if (name == "paper") return paper_profile();
    throw SimError("unknown profile: " + name);
}

}  // namespace airfed
