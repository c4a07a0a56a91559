// Experiment runner: training/evaluation orchestration, oracle cross-checks
// and the quantization benchmark, driven by a JSON config plus flags.
// Flag > file > default precedence; every override is logged.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "airfed/airfed.hpp"

using namespace airfed;

namespace {

struct CliArgs {
    std::string config_path;
    std::string mode = "train";
    std::string profile = "desk";
    std::string out_dir = "out";
    std::string policy = "airfed";
    std::string features = "gats";
    std::string load_dir;
    std::vector<uint64_t> seeds;
    int seed_batch = 0;
    int episodes = -1;
    int num_uavs = -1;
    int num_devices = -1;
    int oracle_snapshots = 100;
    int oracle_max_uavs = 4;
    int max_hops = -1;
    bool quant_on = true, quant_off = false;
    bool fl_on = true, fl_off = false;
    bool reputation_on = true, reputation_off = false;
    bool no_export_tasks = false;
};

SimConfig assemble_config(const CliArgs& args, CLI::App& app) {
    SimConfig cfg = profile_by_name(args.profile);
    if (!args.config_path.empty()) {
        std::ifstream is(args.config_path);
        if (!is) throw SimError("cannot read config file: " + args.config_path);
        json j = json::parse(is);
        apply_json(cfg, j);
        std::cerr << "[config] loaded " << args.config_path << "\n";
    }
    auto log_override = [](const std::string& k, const std::string& v) {
        std::cerr << "[config] flag override: " << k << " = " << v << "\n";
    };
    if (app.count("--episodes")) {
        cfg.episodes = args.episodes;
        log_override("episodes", std::to_string(args.episodes));
    }
    if (app.count("--uavs")) {
        cfg.num_uavs = args.num_uavs;
        log_override("num_uavs", std::to_string(args.num_uavs));
    }
    if (app.count("--devices")) {
        cfg.num_devices = args.num_devices;
        log_override("num_devices", std::to_string(args.num_devices));
    }
    if (app.count("--max-hops")) {
        cfg.max_hops = args.max_hops;
        log_override("max_hops", std::to_string(args.max_hops));
    }
    if (app.count("--no-quant")) {
        cfg.fl.quantization_enabled = false;
        log_override("fl_quantization", "false");
    }
    if (app.count("--no-fl")) {
        cfg.fl.enabled = false;
        log_override("fl_enabled", "false");
    }
    if (app.count("--no-reputation")) {
        cfg.fl.reputation_enabled = false;
        log_override("fl_reputation", "false");
    }
    if (app.count("--paper-kappa")) {
        cfg.energy.cmos_kappa = 1e-18;
        log_override("cmos_kappa", "1e-18");
    }
    return cfg;
}

int run_train_eval(const CliArgs& args, SimConfig cfg) {
    RunOptions opt;
    opt.policy = policy_by_name(args.policy);
    opt.train = args.mode == "train" && opt.policy == PolicyKind::airfed;
    opt.use_gat = args.features == "gats";
    opt.load_dir = args.load_dir;
    if (args.features != "gats" && args.features != "mlp")
        throw SimError("--features must be gats or mlp");

    std::vector<uint64_t> seeds = args.seeds;
    if (args.seed_batch > 0) {
        uint64_t base = seeds.empty() ? cfg.rng_seed : seeds.front();
        seeds.clear();
        for (int i = 0; i < args.seed_batch; ++i) seeds.push_back(base + static_cast<uint64_t>(i));
    }
    if (seeds.empty()) seeds.push_back(cfg.rng_seed);

    auto check = validate(cfg);
    for (const auto& wmsg : check.warnings) std::cerr << "[validate] warning: " << wmsg << "\n";
    if (!check.ok()) {
        for (const auto& emsg : check.errors) std::cerr << "[validate] error: " << emsg << "\n";
        return 2;
    }

    // Seeds fan out to isolated workers; each owns its world and agents.
    std::vector<RunResult> results(seeds.size());
    std::vector<std::thread> pool;
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    size_t next = 0;
    std::mutex mu;
    auto worker = [&] {
        while (true) {
            size_t i;
            {
                std::lock_guard<std::mutex> lk(mu);
                if (next >= seeds.size()) return;
                i = next++;
            }
            SimConfig c = cfg;
            c.rng_seed = seeds[i];
            RunOptions o = opt;
            if (!args.out_dir.empty())
                o.out_dir = args.out_dir + "/seed_" + std::to_string(seeds[i]);
            results[i] = run_experiment(c, o);
        }
    };
    for (unsigned t = 0; t < std::min<size_t>(hw, seeds.size()); ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    // Cross-seed aggregate, reported as mean of the final-10-episode window.
    double wc = 0, dr = 0, cr = 0;
    long hard_violations = 0;
    for (const auto& r : results) {
        size_t n = r.episodes.size();
        size_t from = n > 10 ? n - 10 : 0;
        double wci = 0, dri = 0, cri = 0;
        for (size_t e = from; e < n; ++e) {
            wci += r.episodes[e].weighted_cost;
            dri += r.episodes[e].deadline_rate;
            cri += r.episodes[e].coverage_rate;
        }
        double cnt = static_cast<double>(n - from);
        wc += wci / cnt;
        dr += dri / cnt;
        cr += cri / cnt;
        hard_violations += r.audit.hard_total();
    }
    double ns = static_cast<double>(seeds.size());
    json summary;
    summary["mode"] = args.mode;
    summary["policy"] = args.policy;
    summary["seeds"] = seeds;
    summary["config_hash"] = results.front().cfg_hash;
    summary["final10_weighted_cost_mean"] = wc / ns;
    summary["final10_deadline_rate_mean"] = dr / ns;
    summary["final10_coverage_rate_mean"] = cr / ns;
    summary["hard_constraint_violations"] = hard_violations;
    if (!args.out_dir.empty()) {
        std::filesystem::create_directories(args.out_dir);
        std::ofstream os(args.out_dir + "/combined_summary.json");
        os << summary.dump(2) << "\n";
    }
    std::cout << summary.dump(2) << "\n";
    return 0;
}

int run_oracle_check(const CliArgs& args, SimConfig cfg) {
    cfg.num_uavs = std::min(cfg.num_uavs, args.oracle_max_uavs);
    int max_hops = std::min(cfg.max_hops, 3);
    Rng rng(cfg.rng_seed);
    long paths_checked = 0;
    double worst_rel = 0.0;
    for (int snap = 0; snap < args.oracle_snapshots; ++snap) {
        SimConfig c = cfg;
        c.rng_seed = cfg.rng_seed + static_cast<uint64_t>(snap) * 7919;
        WorldState w = generate_scenario(c);
        // Randomize positions and queue states for snapshot diversity.
        for (auto& u : w.uavs) {
            u.pos = {rng.uniform(0, c.area_m), rng.uniform(0, c.area_m),
                     rng.uniform(c.altitude_lo, c.altitude_hi)};
            double load = rng.uniform(0.0, 0.4e9);
            w.queues[static_cast<size_t>(u.id)].push(1000 + u.id, load);
            u.load_cycles = load;
        }
        std::vector<bool> transmitting(w.devices.size(), false);
        for (size_t m = 0; m < w.devices.size(); ++m) transmitting[m] = rng.uniform() < 0.5;
        int dev = rng.uniform_int(c.num_devices);
        transmitting[static_cast<size_t>(dev)] = true;
        Task task;
        task.id = snap;
        task.origin_device = dev;
        task.cycles = rng.uniform(c.tasks.cycles_lo, c.tasks.cycles_hi);
        task.in_bytes = rng.uniform(c.tasks.in_bytes_lo, c.tasks.in_bytes_hi);
        task.out_bytes = rng.uniform(c.tasks.out_bytes_lo, c.tasks.out_bytes_hi);
        task.deadline_s = rng.uniform(c.tasks.deadline_lo, c.tasks.deadline_hi);
        if (!tasking::select_serving_uav(w, dev)) continue;
        for (const auto& path : tasking::oracle_enumerate_paths(w, task, max_hops)) {
            double oracle_t = tasking::oracle_path_time(task, path, w, transmitting);
            PathRecord rec = tasking::execute_path(task, path, w, transmitting);
            worst_rel = std::max(worst_rel, std::abs(rec.t_total - oracle_t) / oracle_t);
            ++paths_checked;
        }
    }
    bool pass = worst_rel <= 1e-9 && paths_checked > 0;
    std::cout << "oracle-check: " << paths_checked << " paths across " << args.oracle_snapshots
              << " snapshots, worst relative timing error " << worst_rel << " => "
              << (pass ? "100% agreement (<= 1e-9)" : "MISMATCH") << "\n";
    return pass ? 0 : 1;
}

int run_quant_bench(const CliArgs&, SimConfig cfg) {
    marl::Agent agent(cfg, 0, true);
    fl::FlMessage quantized;
    fl::FlMessage full;
    quantized.sender = full.sender = 0;
    Rng rng(cfg.rng_seed);
    for (auto g : {marl::NetGroup::velocity, marl::NetGroup::offload, marl::NetGroup::critic,
                   marl::NetGroup::features}) {
        auto flat = agent.flatten_group(g);
        std::vector<double> mags(flat.size());
        for (auto& m : mags) m = rng.uniform();
        quantized.blobs.push_back(
            fl::quantize(flat, fl::bit_width_schedule(mags, cfg.fl.b_min, cfg.fl.b_max)));
        full.blobs.push_back(fl::raw_blob(flat));
    }
    size_t q_bytes = fl::comm_cost(quantized);
    size_t f_bytes = fl::comm_cost(full);
    double reduction = 1.0 - static_cast<double>(q_bytes) / static_cast<double>(f_bytes);
    json out;
    out["bits"] = {cfg.fl.b_min, cfg.fl.b_max};
    out["quantized_bytes_per_round"] = q_bytes;
    out["full_precision_bytes_per_round"] = f_bytes;
    out["reduction"] = reduction;
    std::cout << out.dump(2) << "\n";
    std::cout << "quant-bench: per-round byte reduction " << reduction * 100.0 << "%\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-UAV edge-computing simulator and federated MARL stack"};
    CliArgs args;
    app.add_option("-c,--config", args.config_path, "JSON config file");
    app.add_option("-m,--mode", args.mode, "train | eval | oracle-check | quant-bench")
        ->check(CLI::IsMember({"train", "eval", "oracle-check", "quant-bench"}));
    app.add_option("-p,--profile", args.profile, "desk | paper");
    app.add_option("-o,--out", args.out_dir, "output directory");
    app.add_option("-s,--seed", args.seeds, "run seed(s); repeatable");
    app.add_option("--seeds", args.seed_batch, "batch: N consecutive seeds from the base seed");
    app.add_option("--policy", args.policy, "airfed | random | greedy");
    app.add_option("--features", args.features, "gats | mlp (ablation)");
    app.add_option("--load", args.load_dir, "checkpoint directory to start from");
    app.add_option("--episodes", args.episodes, "episode count override");
    app.add_option("--uavs", args.num_uavs, "UAV count override");
    app.add_option("--devices", args.num_devices, "device count override");
    app.add_option("--max-hops", args.max_hops, "offloading path TTL override");
    app.add_flag("--no-quant", "disable gradient-sensitive quantization");
    app.add_flag("--no-fl", "disable federated learning (w/o-Fed ablation)");
    app.add_flag("--no-reputation", "equal-weight aggregation (w/o-Reputation ablation)");
    app.add_flag("--paper-kappa", "use the paper's CMOS kappa (1e-18) instead of 1e-28");
    app.add_option("--oracle-snapshots", args.oracle_snapshots, "snapshots for oracle-check");
    CLI11_PARSE(app, argc, argv);

    try {
        SimConfig cfg = assemble_config(args, app);
        if (!args.seeds.empty()) cfg.rng_seed = args.seeds.front();
        if (args.mode == "oracle-check") return run_oracle_check(args, cfg);
        if (args.mode == "quant-bench") return run_quant_bench(args, cfg);
        return run_train_eval(args, cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
