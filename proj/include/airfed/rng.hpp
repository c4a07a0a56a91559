#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace airfed {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic per-stream RNG. Distributions are implemented here rather
// than with std:: distribution objects so that draw sequences are fixed by
// the standard-mandated mt19937_64 output alone.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    // Derive an independent stream; tag keeps streams for different
    // subsystems decoupled from one another.
    Rng fork(uint64_t tag) { return Rng(splitmix64(engine_() ^ splitmix64(tag))); }

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1).
    double uniform() {
        return (engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    int uniform_int(int n) { return static_cast<int>(uniform() * n); }

    // Box-Muller; the spare is cached, so draw order is part of stream state.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Knuth's product method; fine for the small lambda*dt this system uses.
    int poisson(double mean) {
        if (mean <= 0.0) return 0;
        double limit = std::exp(-mean);
        double prod = uniform();
        int n = 0;
        while (prod > limit) {
            prod *= uniform();
            ++n;
        }
        return n;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace airfed
