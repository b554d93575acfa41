// Deterministic random streams. All randomness in the project flows from a
// master seed through mix64-derived per-purpose streams, so any worker count
// reproduces the same bytes. Variates are generated from raw mt19937_64
// output instead of std::uniform_real_distribution / std::normal_distribution,
// whose sequences are implementation-defined.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace aft {

// SplitMix64 finalizer. Good avalanche, cheap, stable across platforms.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from (master, index, tag).
inline uint64_t derive_seed(uint64_t master, uint64_t index, uint64_t tag = 0) {
    return mix64(mix64(master ^ mix64(index)) ^ mix64(tag ^ 0xa5a5a5a5a5a5a5a5ULL));
}

class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1): 53 mantissa bits.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    uint64_t below(uint64_t n) {
        // Rejection sampling keeps the draw exact and portable.
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do {
            v = gen_();
        } while (v >= limit);
        return v % n;
    }

    // Standard normal via Box-Muller, cached spare.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace aft
