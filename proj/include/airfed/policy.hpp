#pragma once

#include <vector>

#include "airfed/config.hpp"
#include "airfed/tensor.hpp"

namespace airfed::marl {

// Shared trunk between both actors and the critic.
struct SharedLayerParams {
    nn::Param w, b;
    SharedLayerParams() = default;
    SharedLayerParams(int in, int out) : w(in, out), b(1, out) {}
    std::vector<nn::Param*> params() { return {&w, &b}; }
    void init(Rng& rng) {
        for (auto* p : params()) nn::init_glorot(*p, rng);
    }
};

inline nn::Var shared_features(nn::Tape& t, const nn::Var& h_final, SharedLayerParams& p) {
    return nn::relu(nn::add(nn::matmul(h_final, nn::param(t, p.w)), nn::param(t, p.b),
                            "shared_pre"),
                    "shared_features");
}

// Gaussian policy over the 2-D velocity. Heads emit per-axis mean and
// log-sigma; sigma is clamped to [sigma_min, v_max].
struct VelocityActorParams {
    nn::Param w1, b1, w2, b2, w_mu, b_mu, w_sig, b_sig;
    VelocityActorParams() = default;
    VelocityActorParams(int in, int hidden, double sigma_init) {
        w1 = nn::Param(in, hidden);
        b1 = nn::Param(1, hidden);
        w2 = nn::Param(hidden, hidden);
        b2 = nn::Param(1, hidden);
        w_mu = nn::Param(hidden, 2);
        b_mu = nn::Param(1, 2);
        w_sig = nn::Param(hidden, 2);
        b_sig = nn::Param(1, 2);
        b_sig.w.setConstant(std::log(sigma_init));
    }
    std::vector<nn::Param*> params() {
        return {&w1, &b1, &w2, &b2, &w_mu, &b_mu, &w_sig, &b_sig};
    }
    // Output heads start near zero so the initial policy is an unbiased
    // N(0, sigma_init) rather than a drift fixed by the random init.
    void init(Rng& rng) {
        double sig0 = b_sig.w(0, 0);
        for (auto* p : params()) nn::init_glorot(*p, rng);
        w_mu.w *= 0.01;
        b_mu.w.setZero();
        w_sig.w *= 0.01;
        b_sig.w.setConstant(sig0);  // keep the configured initial sigma
    }
};

struct VelocityHead {
    nn::Var mu;         // 1x2
    nn::Var log_sigma;  // 1x2, clamped
    nn::Var sigma;      // 1x2
};

inline VelocityHead velocity_forward(nn::Tape& t, const nn::Var& f_shared,
                                     VelocityActorParams& p, const TrainConfig& tc, double v_max) {
    using namespace nn;
    Var h1 = relu(add(matmul(f_shared, param(t, p.w1)), param(t, p.b1)), "vel_h1");
    Var h2 = relu(add(matmul(h1, param(t, p.w2)), param(t, p.b2)), "vel_h2");
    VelocityHead out;
    out.mu = add(matmul(h2, param(t, p.w_mu)), param(t, p.b_mu), "vel_mu");
    out.log_sigma = clamp_pass(add(matmul(h2, param(t, p.w_sig)), param(t, p.b_sig), "vel_logsig"),
                               std::log(tc.sigma_min), std::log(v_max), "vel_logsig_clamp");
    out.sigma = exp_elem(out.log_sigma, "vel_sigma");
    return out;
}

struct VelocitySample {
    Vec2 action;        // pre-clip sample
    nn::Var logprob;    // 1x1
    nn::Var entropy;    // 1x1, differential entropy of the Gaussian
};

// Samples a ~ N(mu, sigma) per axis. The logprob is evaluated at the
// pre-clip sample; velocity clipping is treated as environment dynamics.
inline VelocitySample act_velocity(nn::Tape& t, const VelocityHead& head, Rng& rng) {
    using namespace nn;
    nn::Mat a(1, 2);
    for (int i = 0; i < 2; ++i)
        a(0, i) = head.mu.val()(0, i) + head.sigma.val()(0, i) * rng.normal();
    Var sample = constant(t, a, "vel_sample");
    Var diff = sub(sample, head.mu, "vel_diff");
    Var z2 = divide(hadamard(diff, diff), hadamard(head.sigma, head.sigma), "vel_z2");
    // log N(a; mu, sigma) = -0.5 z^2 - log sigma - 0.5 log(2 pi), per axis
    Var logp = add_scalar(sub(scale(sum(z2), -0.5), sum(head.log_sigma)),
                          -std::log(2.0 * M_PI), "vel_logprob");
    // H = sum_axes (log sigma + 0.5 log(2 pi e))
    Var ent = add_scalar(sum(head.log_sigma), std::log(2.0 * M_PI * std::exp(1.0)), "vel_entropy");
    return {{a(0, 0), a(0, 1)}, logp, ent};
}

// Categorical policy over {execute here} + neighbor slots.
struct OffloadActorParams {
    nn::Param w1, b1, w2, b2, w_head, b_head;
    int slots = 0;
    OffloadActorParams() = default;
    OffloadActorParams(int in, int hidden, int slots_) : slots(slots_) {
        w1 = nn::Param(in, hidden);
        b1 = nn::Param(1, hidden);
        w2 = nn::Param(hidden, hidden);
        b2 = nn::Param(1, hidden);
        w_head = nn::Param(hidden, slots_);
        b_head = nn::Param(1, slots_);
    }
    std::vector<nn::Param*> params() { return {&w1, &b1, &w2, &b2, &w_head, &b_head}; }
    void init(Rng& rng) {
        for (auto* p : params()) nn::init_glorot(*p, rng);
        w_head.w *= 0.01;  // near-uniform initial action distribution
        b_head.w.setZero();
    }
};

inline nn::Var offload_logits(nn::Tape& t, const nn::Var& f_shared, OffloadActorParams& p) {
    using namespace nn;
    Var h1 = relu(add(matmul(f_shared, param(t, p.w1)), param(t, p.b1)), "off_h1");
    Var h2 = relu(add(matmul(h1, param(t, p.w2)), param(t, p.b2)), "off_h2");
    return add(matmul(h2, param(t, p.w_head)), param(t, p.b_head), "off_logits");
}

struct OffloadSample {
    int slot = 0;
    nn::Var logprob;  // 1x1
    nn::Var entropy;  // 1x1
    nn::Var probs;    // 1xS
};

// Masked categorical sample. Infeasible slots carry exactly zero
// probability; preconditions guarantee at least one feasible slot.
inline OffloadSample act_offload(nn::Tape& t, const nn::Var& logits,
                                 const std::vector<bool>& feasible, Rng& rng) {
    using namespace nn;
    long S = logits.cols();
    nn::Mat mask = nn::Mat::Zero(1, S);
    int n_ok = 0;
    for (long s = 0; s < S; ++s)
        if (s < static_cast<long>(feasible.size()) && feasible[static_cast<size_t>(s)]) {
            mask(0, s) = 1.0;
            ++n_ok;
        }
    if (n_ok == 0) throw SimError("act_offload: all actions masked (ExhaustedActions)");

    Var probs = masked_softmax_rows(logits, mask, "off_probs");
    double u = rng.uniform();
    double acc = 0.0;
    int slot = -1;
    for (long s = 0; s < S; ++s) {
        acc += probs.val()(0, s);
        if (u <= acc) {
            slot = static_cast<int>(s);
            break;
        }
    }
    if (slot < 0) {  // numerical tail: last feasible slot
        for (long s = S - 1; s >= 0; --s)
            if (mask(0, s) > 0.5) {
                slot = static_cast<int>(s);
                break;
            }
    }

    OffloadSample out;
    out.slot = slot;
    out.probs = probs;
    // clamp against log(0) from extreme logit gaps
    Var p_slot = clamp_pass(select(probs, 0, slot, "off_p_slot"), 1e-300, 1.0);
    out.logprob = log_elem(p_slot, "off_logprob");
    // H = -sum p log p over feasible slots
    Var p_safe = add(probs, constant(t, nn::Mat::Constant(1, S, 1e-300), "off_eps"), "off_p_safe");
    out.entropy = scale(sum(hadamard(probs, log_elem(p_safe, "off_logp"))), -1.0, "off_entropy");
    return out;
}

// Scalar state-value estimator.
struct CriticParams {
    nn::Param w1, b1, w2, b2, w_head, b_head;
    CriticParams() = default;
    CriticParams(int in, int h1, int h2) {
        w1 = nn::Param(in, h1);
        b1 = nn::Param(1, h1);
        w2 = nn::Param(h1, h2);
        b2 = nn::Param(1, h2);
        w_head = nn::Param(h2, 1);
        b_head = nn::Param(1, 1);
    }
    std::vector<nn::Param*> params() { return {&w1, &b1, &w2, &b2, &w_head, &b_head}; }
    void init(Rng& rng) {
        for (auto* p : params()) nn::init_glorot(*p, rng);
        w_head.w *= 0.01;  // initial value estimates near zero
        b_head.w.setZero();
    }
};

inline nn::Var critic_value(nn::Tape& t, const nn::Var& f_shared, CriticParams& p) {
    using namespace nn;
    Var h1 = relu(add(matmul(f_shared, param(t, p.w1)), param(t, p.b1)), "critic_h1");
    Var h2 = relu(add(matmul(h1, param(t, p.w2)), param(t, p.b2)), "critic_h2");
    return add(matmul(h2, param(t, p.w_head)), param(t, p.b_head), "critic_v");
}

// One-step TD advantage; plain arithmetic on detached values.
inline double advantage(double reward, double gamma, double v_next, double v_now, bool done) {
    return reward + (done ? 0.0 : gamma * v_next) - v_now;
}

}  // namespace airfed::marl
