#pragma once

#include <array>
#include <memory>
#include <vector>

#include "airfed/gat.hpp"
#include "airfed/graph.hpp"
#include "airfed/gru.hpp"
#include "airfed/policy.hpp"
#include "airfed/sim.hpp"

namespace airfed::marl {

struct RewardBreakdown {
    double performance = 0.0;
    double deadline = 0.0;
    double coverage = 0.0;
    double total() const { return performance + deadline + coverage; }
};

// Per-UAV reward: negative normalized cost delta, deadline-overshoot
// penalty over tasks this UAV served, and the coverage bonus.
inline RewardBreakdown compute_reward(const SimConfig& cfg, const StepOutcome& out, int k) {
    RewardBreakdown r;
    double time_term = 0.0;
    if (out.served_count[static_cast<size_t>(k)] > 0)
        time_term = out.served_time_sum[static_cast<size_t>(k)] /
                    out.served_count[static_cast<size_t>(k)] / cfg.train.time_scale_s;
    double energy_term = out.energy_step[static_cast<size_t>(k)] / cfg.energy_reward_scale();
    r.performance = -(cfg.reward.alpha_time * time_term + cfg.reward.beta_energy * energy_term);
    r.deadline = -cfg.reward.lambda_deadline * out.deadline_overshoot[static_cast<size_t>(k)];
    r.coverage = cfg.reward.eta_coverage * out.coverage_count[static_cast<size_t>(k)];
    return r;
}

enum class NetGroup { features, velocity, offload, critic };

struct LossReport {
    double l_vel = 0.0;
    double l_off = 0.0;
    double l_critic = 0.0;
    double entropy = 0.0;
    int steps = 0;
    int off_decisions = 0;
    bool updated = false;
};

// One UAV's learning context: feature extractor (GAT or the MLP ablation),
// GRU, shared trunk, both actors, critic, window buffer and optimizers.
// Forward graphs stay on the tape across the window so the update reaches
// the feature nets through time.
class Agent {
public:
    Agent(const SimConfig& cfg, int id, bool use_gat)
        : cfg_(cfg), id_(id), use_gat_(use_gat),
          rng_(Rng(cfg.rng_seed).fork(0xA6E47000ULL + static_cast<uint64_t>(id))),
          adam_features_(cfg.train.lr_features), adam_vel_(cfg.train.lr_vel),
          adam_off_(cfg.train.lr_off), adam_critic_(cfg.train.lr_critic) {
        const auto& net = cfg.net;
        if (use_gat_) gat_ = std::make_unique<graphnn::GatParams>(net);
        else mlp_ = std::make_unique<graphnn::MlpExtractorParams>(net);
        gru_ = graphnn::GruParams(net.gru_dim, net.gru_dim);
        shared_ = SharedLayerParams(net.gru_dim, net.shared_dim);
        vel_ = VelocityActorParams(net.shared_dim, net.actor_hidden, cfg.train.sigma_init);
        off_ = OffloadActorParams(net.shared_dim, net.actor_hidden, cfg.num_uavs);
        critic_ = CriticParams(net.shared_dim, net.critic_hidden1, net.critic_hidden2);

        if (use_gat_) gat_->init(rng_);
        else mlp_->init(rng_);
        gru_.init(rng_);
        shared_.init(rng_);
        vel_.init(rng_);
        off_.init(rng_);
        critic_.init(rng_);

        h_prev_ = nn::Mat::Zero(1, net.gru_dim);
        for (auto g : {NetGroup::features, NetGroup::velocity, NetGroup::offload,
                       NetGroup::critic})
            grad_mags_[group_index(g)].assign(static_cast<size_t>(group_size(g)), 0.0);
    }

    int id() const { return id_; }

    // Forward pass for the current world state; refreshes the local graph on
    // its adaptive cadence.
    void begin_step(const WorldState& w, AuditCounters* audit) {
        if (steps_until_refresh_ <= 0) {
            graph_ = graphnn::build_local_graph(w, id_);
            double interval =
                adaptive_update_interval(w.uav(id_).vel, w.cfg.dt_base, w.cfg.alpha_speed);
            steps_until_refresh_ = std::max(1, static_cast<int>(std::lround(interval / w.cfg.dt)));
        }
        --steps_until_refresh_;

        if (tape_.size() == 0) h_prev_var_ = nn::constant(tape_, h_prev_, "h_prev");
        nn::Var spatial = use_gat_ ? graphnn::gat_forward(tape_, graph_, *gat_, audit)
                                   : graphnn::mlp_forward(tape_, graph_, *mlp_);
        nn::Var h_final = graphnn::gru_step(tape_, spatial, h_prev_var_, gru_);
        f_shared_ = shared_features(tape_, h_final, shared_);
        h_prev_var_ = h_final;
        h_prev_ = h_final.val();

        records_.push_back(StepRecord{});
        records_.back().v = critic_value(tape_, f_shared_, critic_);
    }

    Vec2 sample_velocity() {
        VelocityHead head = velocity_forward(tape_, f_shared_, vel_, cfg_.train, cfg_.v_max);
        VelocitySample s = act_velocity(tape_, head, rng_);
        records_.back().logp_vel = s.logprob;
        records_.back().ent_vel = s.entropy;
        records_.back().has_vel = true;
        return s.action;
    }

    // Offloading decision over slot 0 (here) plus the K-1 neighbor slots.
    int choose_offload(const std::vector<bool>& feasible) {
        nn::Var logits = offload_logits(tape_, f_shared_, off_);
        OffloadSample s = act_offload(tape_, logits, feasible, rng_);
        records_.back().logp_off.push_back(s.logprob);
        records_.back().ent_off.push_back(s.entropy);
        return s.slot;
    }

    void finish_step(double reward, bool done) {
        records_.back().reward = reward;
        records_.back().done = done;
    }

    double value_of_current_step() const { return records_.back().v.val()(0, 0); }

    // Detached value estimate of the world's current state, used to
    // bootstrap the TD target at window boundaries.
    double bootstrap_value(const WorldState& w) {
        nn::Tape t;
        LocalGraph g = graphnn::build_local_graph(w, id_);
        nn::Var spatial = use_gat_ ? graphnn::gat_forward(t, g, *gat_)
                                   : graphnn::mlp_forward(t, g, *mlp_);
        nn::Var h = graphnn::gru_step(t, spatial, nn::constant(t, h_prev_), gru_);
        nn::Var f = shared_features(t, h, shared_);
        return critic_value(t, f, critic_).val()(0, 0);
    }

    bool window_full() const {
        return static_cast<int>(records_.size()) >= cfg_.train.window_steps;
    }
    int buffered_steps() const { return static_cast<int>(records_.size()); }

    // Policy-gradient update over the buffered window. Advantage targets
    // use detached values (no gradient flows through V(t+1)); the buffer
    // and tape are cleared afterwards (on-policy window).
    LossReport update(double bootstrap_v) {
        LossReport rep;
        if (records_.empty()) return rep;
        const auto& tc = cfg_.train;
        size_t n = records_.size();

        std::vector<double> adv(n), target(n);
        for (size_t i = 0; i < n; ++i) {
            double v_next = i + 1 < n ? records_[i + 1].v.val()(0, 0) : bootstrap_v;
            adv[i] = advantage(records_[i].reward, tc.gamma, v_next, records_[i].v.val()(0, 0),
                               records_[i].done);
            target[i] = records_[i].reward +
                        (records_[i].done ? 0.0 : tc.gamma * v_next);
        }

        nn::Var l_vel = nn::scalar(tape_, 0.0);
        nn::Var l_off = nn::scalar(tape_, 0.0);
        nn::Var l_critic = nn::scalar(tape_, 0.0);
        nn::Var ent_vel = nn::scalar(tape_, 0.0);
        nn::Var ent_off = nn::scalar(tape_, 0.0);
        int n_vel = 0, n_off = 0;
        for (size_t i = 0; i < n; ++i) {
            auto& r = records_[i];
            if (r.has_vel) {
                l_vel = nn::add(l_vel, nn::scale(r.logp_vel, -adv[i]));
                ent_vel = nn::add(ent_vel, r.ent_vel);
                ++n_vel;
            }
            for (size_t d = 0; d < r.logp_off.size(); ++d) {
                l_off = nn::add(l_off, nn::scale(r.logp_off[d], -adv[i]));
                ent_off = nn::add(ent_off, r.ent_off[d]);
                ++n_off;
            }
            nn::Var td = nn::sub(nn::scalar(tape_, target[i]), r.v, "td_error");
            l_critic = nn::add(l_critic, nn::hadamard(td, td));
        }
        if (n_vel > 0) l_vel = nn::scale(l_vel, 1.0 / n_vel);
        if (n_off > 0) l_off = nn::scale(l_off, 1.0 / n_off);
        l_critic = nn::scale(l_critic, 1.0 / static_cast<double>(n));
        nn::Var entropy = nn::scalar(tape_, 0.0);
        if (n_vel > 0) entropy = nn::add(entropy, nn::scale(ent_vel, 1.0 / n_vel));
        if (n_off > 0) entropy = nn::add(entropy, nn::scale(ent_off, 1.0 / n_off));

        nn::Var total = nn::add(nn::add(l_vel, l_off), l_critic);
        total = nn::sub(total, nn::scale(entropy, tc.beta_entropy), "total_loss");
        tape_.backward(total.idx);

        rep.l_vel = l_vel.val()(0, 0);
        rep.l_off = l_off.val()(0, 0);
        rep.l_critic = l_critic.val()(0, 0);
        rep.entropy = entropy.val()(0, 0);
        rep.steps = static_cast<int>(n);
        rep.off_decisions = n_off;
        rep.updated = true;

        for (auto g : {NetGroup::features, NetGroup::velocity, NetGroup::offload,
                       NetGroup::critic})
            snapshot_grad_mags(g);

        if (tc.grad_clip > 0.0)
            for (auto g : {NetGroup::features, NetGroup::velocity, NetGroup::offload,
                           NetGroup::critic})
                clip_group_grads(g, tc.grad_clip);

        adam_features_.step(group_params(NetGroup::features));
        adam_vel_.step(group_params(NetGroup::velocity));
        adam_off_.step(group_params(NetGroup::offload));
        adam_critic_.step(group_params(NetGroup::critic));
        zero_grads();
        discard_window();
        return rep;
    }

    // Drops buffered experience without an update (evaluation mode).
    void discard_window() {
        records_.clear();
        tape_.clear();
        f_shared_ = nn::Var{};
        h_prev_var_ = nn::Var{};
    }

    void reset_episode_state() {
        discard_window();
        h_prev_.setZero();
        steps_until_refresh_ = 0;
    }

    std::vector<nn::Param*> group_params(NetGroup g) {
        std::vector<nn::Param*> out;
        switch (g) {
            case NetGroup::features:
                if (use_gat_) out = gat_->params();
                else out = mlp_->params();
                for (auto* p : gru_.params()) out.push_back(p);
                for (auto* p : shared_.params()) out.push_back(p);
                break;
            case NetGroup::velocity: out = vel_.params(); break;
            case NetGroup::offload: out = off_.params(); break;
            case NetGroup::critic: out = critic_.params(); break;
        }
        return out;
    }

    // All parameters in checkpoint/FL declaration order.
    std::vector<nn::Param*> all_params() {
        std::vector<nn::Param*> out;
        for (auto g : {NetGroup::features, NetGroup::velocity, NetGroup::offload,
                       NetGroup::critic})
            for (auto* p : group_params(g)) out.push_back(p);
        return out;
    }

    long group_size(NetGroup g) {
        long n = 0;
        for (auto* p : group_params(g)) n += p->size();
        return n;
    }

    std::vector<double> flatten_group(NetGroup g) {
        std::vector<double> out;
        for (auto* p : group_params(g))
            out.insert(out.end(), p->w.data(), p->w.data() + p->size());
        return out;
    }

    void load_group(NetGroup g, const std::vector<double>& flat) {
        size_t off = 0;
        for (auto* p : group_params(g)) {
            std::copy(flat.begin() + static_cast<long>(off),
                      flat.begin() + static_cast<long>(off) + p->size(), p->w.data());
            off += static_cast<size_t>(p->size());
        }
        if (off != flat.size()) throw SimError("load_group: size mismatch");
    }

    // |grad| snapshot from the most recent update, quantizer ranking input.
    const std::vector<double>& grad_magnitudes(NetGroup g) const {
        return grad_mags_[group_index(g)];
    }

    bool uses_gat() const { return use_gat_; }
    const SimConfig& config() const { return cfg_; }

private:
    struct StepRecord {
        nn::Var v;
        nn::Var logp_vel;
        nn::Var ent_vel;
        bool has_vel = false;
        std::vector<nn::Var> logp_off;
        std::vector<nn::Var> ent_off;
        double reward = 0.0;
        bool done = false;
    };

    static size_t group_index(NetGroup g) { return static_cast<size_t>(g); }

    void snapshot_grad_mags(NetGroup g) {
        auto& dst = grad_mags_[group_index(g)];
        dst.clear();
        for (auto* p : group_params(g))
            for (long i = 0; i < p->size(); ++i) dst.push_back(std::abs(p->g.data()[i]));
    }

    void zero_grads() {
        for (auto* p : all_params()) p->zero_grad();
    }

    // Global-norm gradient clip per network; caps the update magnitude
    // against heavy-tailed advantage spikes.
    void clip_group_grads(NetGroup g, double max_norm) {
        double sq = 0.0;
        auto params = group_params(g);
        for (auto* p : params) sq += p->g.squaredNorm();
        double norm = std::sqrt(sq);
        if (norm <= max_norm || norm == 0.0) return;
        double s = max_norm / norm;
        for (auto* p : params) p->g *= s;
    }

    SimConfig cfg_;
    int id_;
    bool use_gat_;
    Rng rng_;

    std::unique_ptr<graphnn::GatParams> gat_;
    std::unique_ptr<graphnn::MlpExtractorParams> mlp_;
    graphnn::GruParams gru_;
    SharedLayerParams shared_;
    VelocityActorParams vel_;
    OffloadActorParams off_;
    CriticParams critic_;

    nn::Adam adam_features_;
    nn::Adam adam_vel_;
    nn::Adam adam_off_;
    nn::Adam adam_critic_;

    nn::Tape tape_;
    nn::Var h_prev_var_;
    nn::Var f_shared_;
    nn::Mat h_prev_;
    LocalGraph graph_;
    int steps_until_refresh_ = 0;
    std::vector<StepRecord> records_;
    std::array<std::vector<double>, 4> grad_mags_;
};

}  // namespace airfed::marl
