#pragma once

#include <functional>
#include <vector>

#include "airfed/tensor.hpp"

namespace airfed::gradcheck {

// Central-difference gradient check. `forward` must rebuild the graph and
// return the scalar loss; `params` are the parameters whose analytic grads
// (already populated by one backward pass) are being verified. Returns the
// worst relative error over the sampled coordinates.
inline double grad_check(const std::function<double()>& forward,
                         const std::vector<nn::Param*>& params, Rng& rng,
                         int samples_per_param = 6, double eps = 1e-5) {
    double worst = 0.0;
    for (auto* p : params) {
        long n = p->w.size();
        int samples = static_cast<int>(std::min<long>(samples_per_param, n));
        for (int s = 0; s < samples; ++s) {
            long idx = n == 1 ? 0 : static_cast<long>(rng.uniform() * n);
            double* coeff = p->w.data() + idx;
            double orig = *coeff;
            *coeff = orig + eps;
            double fp = forward();
            *coeff = orig - eps;
            double fm = forward();
            *coeff = orig;
            double fd = (fp - fm) / (2.0 * eps);
            double an = p->g.data()[idx];
            double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
            double rel = std::abs(fd - an) / denom;
            if (std::abs(fd) < 1e-8 && std::abs(an) < 1e-8) rel = 0.0;
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

}  // namespace airfed::gradcheck
