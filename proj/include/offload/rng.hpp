#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace offload {

// Deterministic random source used everywhere in the project.
//
// The engine is std::mt19937_64, whose output sequence is fully specified
// by the C++ standard, so a seed pins the stream on every platform. The
// std::*_distribution adapters are NOT specified bit-for-bit, so all
// conversions to doubles/ints are implemented here with fixed rules:
//
//   u01():        (x >> 11) * 2^-53            -> [0, 1)
//   below(n):     rejection sampling on x % n  -> unbiased [0, n)
//   normal():     Box-Muller on two u01 draws (cos branch, then sin spare)
//   exponential:  -mean * log1p(-u01())
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    double u01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    // Unbiased integer in [0, n). n must be nonzero.
    uint64_t below(uint64_t n) {
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return x % n;
    }

    bool bernoulli(double p) { return u01() < p; }

    // Standard normal. Produces pairs via Box-Muller and hands out the
    // sine-branch value on the following call.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - u01();  // (0, 1], keeps log finite
        const double u2 = u01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Exponential inter-arrival draw; strictly nonnegative.
    double exponential(double mean) { return -mean * std::log1p(-u01()); }

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// splitmix64 finalizer; used to derive independent sub-seeds from a base
// seed and a stream index without correlating the resulting engines.
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    uint64_t z = seed ^ (stream * 0x9E3779B97F4A7C15ULL);
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

}  // namespace offload
