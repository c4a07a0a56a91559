#pragma once

#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "airfed/agent.hpp"
#include "airfed/checkpoint.hpp"
#include "airfed/fedlearn.hpp"
#include "airfed/metrics.hpp"
#include "airfed/scenario.hpp"
#include "airfed/sim.hpp"

namespace airfed {

enum class PolicyKind { airfed, random_ref, greedy_ref };

inline PolicyKind policy_by_name(const std::string& name) {
    if (name == "airfed") return PolicyKind::airfed;
    if (name == "random") return PolicyKind::random_ref;
    if (name == "greedy") return PolicyKind::greedy_ref;
    throw SimError("unknown policy: " + name);
}

struct RunOptions {
    PolicyKind policy = PolicyKind::airfed;
    bool train = true;
    bool use_gat = true;      // false -> feed-forward extractor ablation
    std::string out_dir;      // empty: keep results in memory only
    std::string load_dir;     // optional checkpoint directory to start from
};

struct RunResult {
    std::vector<EpisodeMetrics> episodes;
    AuditCounters audit;
    uint64_t cfg_hash = 0;
};

// Reference policies standing in for the out-of-scope baselines.
namespace reference {

inline Vec2 random_velocity(double v_max, Rng& rng) {
    double r = v_max * std::sqrt(rng.uniform());
    double theta = 2.0 * M_PI * rng.uniform();
    return {r * std::cos(theta), r * std::sin(theta)};
}

inline int random_feasible_slot(const std::vector<bool>& feasible, Rng& rng) {
    std::vector<int> ok;
    for (size_t s = 0; s < feasible.size(); ++s)
        if (feasible[s]) ok.push_back(static_cast<int>(s));
    return ok[static_cast<size_t>(rng.uniform_int(static_cast<int>(ok.size())))];
}

// Velocity toward the centroid of currently uncovered device mass.
inline Vec2 greedy_velocity(const WorldState& w, int k) {
    Vec2 sum{0, 0};
    int n = 0;
    for (int m = 0; m < static_cast<int>(w.devices.size()); ++m) {
        bool covered = false;
        for (int j = 0; j < static_cast<int>(w.uavs.size()); ++j)
            if (w.uav(j).active && radio::covers(w, j, m)) {
                covered = true;
                break;
            }
        if (!covered) {
            sum = sum + w.devices[static_cast<size_t>(m)].loc;
            ++n;
        }
    }
    if (n == 0) return {0, 0};
    Vec2 target = sum * (1.0 / n);
    Vec2 dir{target.x - w.uav(k).pos.x, target.y - w.uav(k).pos.y};
    double d = dir.norm();
    if (d < 1e-9) return {0, 0};
    return dir * (w.cfg.v_max / d);
}

// Least-loaded feasible slot; slot 0 is the current UAV.
inline int greedy_offload_slot(const WorldState& w, int cur, const std::vector<int>& slot_uavs,
                               const std::vector<bool>& feasible) {
    int best = -1;
    double best_load = 0.0;
    for (size_t s = 0; s < feasible.size(); ++s) {
        if (!feasible[s]) continue;
        int uav = s == 0 ? cur : slot_uavs[s - 1];
        double load = w.uav(uav).load_cycles;
        if (best < 0 || load < best_load) {
            best = static_cast<int>(s);
            best_load = load;
        }
    }
    return best;
}

}  // namespace reference

// Episode/run orchestration: CMARL acting and updates interleaved with the
// asynchronous reputation-weighted FL rounds, all on the world clock.
class Trainer {
public:
    Trainer(const SimConfig& cfg, const RunOptions& opt)
        : cfg_(cfg), opt_(opt), world_(generate_scenario(cfg)),
          fl_rng_(Rng(cfg.rng_seed).fork(0xF1A70001ULL)),
          ref_rng_(Rng(cfg.rng_seed).fork(0xF1A70002ULL)) {
        if (opt.policy == PolicyKind::airfed) {
            for (int k = 0; k < cfg.num_uavs; ++k)
                agents_.push_back(std::make_unique<marl::Agent>(cfg, k, opt.use_gat));
            if (!opt.load_dir.empty()) load_checkpoints(opt.load_dir);
        }
        reputations_.resize(static_cast<size_t>(cfg.num_uavs));
        for (int k = 0; k < cfg.num_uavs; ++k) reputations_[static_cast<size_t>(k)].uav = k;
    }

    RunResult run() {
        RunResult result;
        result.cfg_hash = config_hash(cfg_);
        RunningMinMax extrema;
        for (int episode = 0; episode < cfg_.episodes; ++episode) {
            run_episode(episode, extrema);
        }
        result.episodes = sink_.episodes();
        result.audit = world_.audit;
        if (!opt_.out_dir.empty()) {
            metrics::export_all(sink_, cfg_, opt_.out_dir);
            if (opt_.policy == PolicyKind::airfed && opt_.train)
                save_checkpoints(opt_.out_dir + "/checkpoints");
        }
        return result;
    }

    const MetricsSink& sink() const { return sink_; }
    std::vector<std::unique_ptr<marl::Agent>>& agents() { return agents_; }
    const WorldState& world() const { return world_; }

    void save_checkpoints(const std::string& dir) {
        std::filesystem::create_directories(dir);
        for (auto& a : agents_)
            ckpt::save_params(a->all_params(),
                              dir + "/agent_" + std::to_string(a->id()) + ".bin");
    }

    void load_checkpoints(const std::string& dir) {
        for (auto& a : agents_)
            ckpt::load_params(a->all_params(),
                              dir + "/agent_" + std::to_string(a->id()) + ".bin");
    }

private:
    struct PendingDelivery {
        int sender = -1;
        double transfer_s = 0.0;
        bool dropped = false;
        fl::FlMessage msg;
    };
    struct PendingRound {
        int receiver = -1;
        double due_clock = 0.0;
        std::vector<PendingDelivery> deliveries;
    };

    bool fl_active() const {
        return opt_.policy == PolicyKind::airfed && opt_.train && cfg_.fl.enabled &&
               cfg_.num_uavs > 1;
    }

    std::vector<marl::NetGroup> fl_groups() const {
        std::vector<marl::NetGroup> gs{marl::NetGroup::velocity, marl::NetGroup::offload,
                                       marl::NetGroup::critic};
        if (cfg_.fl.aggregate_feature_nets) gs.push_back(marl::NetGroup::features);
        return gs;
    }

    fl::FlMessage build_message(marl::Agent& a, double rep) {
        fl::FlMessage msg;
        msg.sender = a.id();
        msg.sender_rep = rep;
        for (auto g : fl_groups()) {
            auto flat = a.flatten_group(g);
            if (cfg_.fl.quantization_enabled) {
                auto bits = fl::bit_width_schedule(a.grad_magnitudes(g), cfg_.fl.b_min,
                                                   cfg_.fl.b_max);
                msg.blobs.push_back(fl::quantize(flat, bits));
            } else {
                msg.blobs.push_back(fl::raw_blob(flat));
            }
        }
        return msg;
    }

    void flush_agent(marl::Agent& a, bool done) {
        if (a.buffered_steps() == 0) return;
        double bootstrap = done ? 0.0 : a.bootstrap_value(world_);
        auto rep = a.update(bootstrap);
        if (rep.updated) sink_.record_losses(rep.l_vel, rep.l_off, rep.l_critic);
    }

    void start_fl_round(int k) {
        auto neighbors = fl::select_fl_neighbors(world_, k);
        PendingRound round;
        round.receiver = k;
        round.due_clock = world_.clock + cfg_.fl.timeout_steps * cfg_.dt;
        for (int j : neighbors) {
            PendingDelivery d;
            d.sender = j;
            d.msg = build_message(*agents_[static_cast<size_t>(j)],
                                  reputations_[static_cast<size_t>(j)].rep);
            size_t bytes = fl::comm_cost(d.msg);
            double rate = radio::inter_uav_rate(cfg_.radio, world_.uav(j).pos, world_.uav(k).pos);
            d.transfer_s = static_cast<double>(bytes) * 8.0 / rate;
            d.dropped = fl_rng_.uniform() < cfg_.fl.drop_prob;
            ++reputations_[static_cast<size_t>(j)].fl_attempts;
            sink_.record_fl_bytes(static_cast<double>(bytes));
            if (cfg_.fl.count_comm_energy) {
                sim::debit(world_, j, cfg_.radio.uav_tx_w * d.transfer_s,
                           &EnergyLedger::e_comm_fl);
                sim::debit(world_, k, cfg_.radio.uav_rx_w * d.transfer_s,
                           &EnergyLedger::e_comm_fl);
            }
            round.deliveries.push_back(std::move(d));
        }
        pending_.push_back(std::move(round));
    }

    // Best-effort aggregation once a round's collection window closes.
    void complete_fl_round(const PendingRound& round) {
        int k = round.receiver;
        if (!world_.uav(k).active) return;
        std::vector<const fl::FlMessage*> received;
        for (const auto& d : round.deliveries) {
            bool ok = !d.dropped && d.transfer_s <= cfg_.fl.timeout_steps * cfg_.dt &&
                      world_.uav(d.sender).active &&
                      airfed::radio::inter_uav_connected(cfg_.radio, world_.uav(d.sender).pos,
                                                         world_.uav(k).pos);
            if (ok) {
                received.push_back(&d.msg);
                ++reputations_[static_cast<size_t>(d.sender)].fl_successes;
            }
        }
        // Aggregation rewrites parameters, so consume the open window first.
        flush_agent(*agents_[static_cast<size_t>(k)], false);

        auto groups = fl_groups();
        bool use_rep = cfg_.fl.reputation_enabled;
        double own_rep = use_rep ? reputations_[static_cast<size_t>(k)].rep : 1.0;
        for (size_t gi = 0; gi < groups.size(); ++gi) {
            auto own = agents_[static_cast<size_t>(k)]->flatten_group(groups[gi]);
            std::vector<fl::Contribution> contribs;
            for (const auto* m : received)
                contribs.push_back(fl::Contribution{fl::dequantize(m->blobs[gi]),
                                                    use_rep ? m->sender_rep : 1.0});
            std::vector<double> weights;
            auto merged = fl::aggregate(own, own_rep, contribs, &weights);
            double wsum = 0.0;
            for (double wv : weights) wsum += wv;
            if (std::abs(wsum - 1.0) > 1e-12) ++world_.audit.aggregation_weights;
            agents_[static_cast<size_t>(k)]->load_group(groups[gi], merged);
        }
    }

    void run_episode(int episode, RunningMinMax& extrema) {
        if (episode > 0) reset_episode(world_);
        for (auto& a : agents_) a->reset_episode_state();
        for (auto& r : reputations_) {
            r.tasks_assigned = r.tasks_completed = 0;
            r.fl_attempts = r.fl_successes = 0;
        }
        pending_.clear();
        next_round_.assign(static_cast<size_t>(cfg_.num_uavs), 0.0);
        if (fl_active()) {
            for (int k = 0; k < cfg_.num_uavs; ++k)
                next_round_[static_cast<size_t>(k)] =
                    1.0 / fl::aggregation_frequency(world_.uav(k).vel, cfg_.fl.f_base_hz,
                                                    cfg_.fl.alpha_mobility);
        }

        sink_.begin_episode(episode, cfg_.rng_seed);
        const int steps = cfg_.steps_per_episode();
        std::vector<bool> acted(static_cast<size_t>(cfg_.num_uavs), false);

        for (int t = 0; t < steps; ++t) {
            bool last_step = t == steps - 1;
            StepActions actions;
            actions.velocity.assign(static_cast<size_t>(cfg_.num_uavs), std::nullopt);

            if (opt_.policy == PolicyKind::airfed) {
                for (int k = 0; k < cfg_.num_uavs; ++k) {
                    acted[static_cast<size_t>(k)] = world_.uav(k).active;
                    if (!world_.uav(k).active) continue;
                    auto& agent = *agents_[static_cast<size_t>(k)];
                    agent.begin_step(world_, &world_.audit);
                    actions.velocity[static_cast<size_t>(k)] = agent.sample_velocity();
                }
                actions.chooser = [this](int cur, const Task&, const std::vector<int>&,
                                         const std::vector<bool>& feasible) {
                    return agents_[static_cast<size_t>(cur)]->choose_offload(feasible);
                };
            } else if (opt_.policy == PolicyKind::random_ref) {
                for (int k = 0; k < cfg_.num_uavs; ++k)
                    if (world_.uav(k).active)
                        actions.velocity[static_cast<size_t>(k)] =
                            reference::random_velocity(cfg_.v_max, ref_rng_);
                actions.chooser = [this](int, const Task&, const std::vector<int>&,
                                         const std::vector<bool>& feasible) {
                    return reference::random_feasible_slot(feasible, ref_rng_);
                };
            } else {
                for (int k = 0; k < cfg_.num_uavs; ++k)
                    if (world_.uav(k).active)
                        actions.velocity[static_cast<size_t>(k)] =
                            reference::greedy_velocity(world_, k);
                actions.chooser = [this](int cur, const Task&, const std::vector<int>& slots,
                                         const std::vector<bool>& feasible) {
                    return reference::greedy_offload_slot(world_, cur, slots, feasible);
                };
            }

            StepOutcome out = step_world(world_, actions, &sink_);

            // Executor-side task statistics feed the reputation mechanism.
            for (const auto& rec : out.completed) {
                auto& r = reputations_[static_cast<size_t>(rec.path.back())];
                ++r.tasks_assigned;
                if (rec.met_deadline) ++r.tasks_completed;
            }
            for (auto& r : reputations_)
                r = fl::update_reputation(r, cfg_.fl.alpha_succ, cfg_.fl.alpha_stab, cfg_.fl.rho);

            if (opt_.policy == PolicyKind::airfed) {
                for (int k = 0; k < cfg_.num_uavs; ++k) {
                    if (!acted[static_cast<size_t>(k)]) continue;
                    auto& agent = *agents_[static_cast<size_t>(k)];
                    auto rb = marl::compute_reward(cfg_, out, k);
                    bool done = last_step || !world_.uav(k).active;
                    agent.finish_step(rb.total(), done);
                    sink_.record_reward(rb.total());
                }

                if (fl_active()) {
                    // Complete rounds whose collection window elapsed.
                    while (!pending_.empty() && pending_.front().due_clock <= world_.clock) {
                        complete_fl_round(pending_.front());
                        pending_.pop_front();
                    }
                    for (int k = 0; k < cfg_.num_uavs; ++k) {
                        if (!world_.uav(k).active) continue;
                        if (world_.clock >= next_round_[static_cast<size_t>(k)]) {
                            start_fl_round(k);
                            double f = fl::aggregation_frequency(world_.uav(k).vel,
                                                                 cfg_.fl.f_base_hz,
                                                                 cfg_.fl.alpha_mobility);
                            next_round_[static_cast<size_t>(k)] = world_.clock + 1.0 / f;
                        }
                    }
                }

                for (int k = 0; k < cfg_.num_uavs; ++k) {
                    if (!acted[static_cast<size_t>(k)]) continue;
                    auto& agent = *agents_[static_cast<size_t>(k)];
                    bool done = last_step || !world_.uav(k).active;
                    if (opt_.train) {
                        if (agent.window_full() || done) flush_agent(agent, done);
                    } else {
                        agent.discard_window();
                    }
                }
            }
        }
        sink_.end_episode(world_.ledgers, cfg_.num_devices, extrema, cfg_.reward);
    }

    SimConfig cfg_;
    RunOptions opt_;
    WorldState world_;
    MetricsSink sink_;
    std::vector<std::unique_ptr<marl::Agent>> agents_;
    std::vector<fl::ReputationRecord> reputations_;
    std::deque<PendingRound> pending_;
    std::vector<double> next_round_;
    Rng fl_rng_;
    Rng ref_rng_;
};

inline RunResult run_experiment(const SimConfig& cfg, const RunOptions& opt) {
    Trainer t(cfg, opt);
    return t.run();
}

}  // namespace airfed
