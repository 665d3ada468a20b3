#pragma once

#include <cmath>
#include <cstdint>

namespace dfp {

// Deterministic counter-based RNG. We avoid <random> distributions because
// their output is implementation-defined; every stream here is reproducible
// from its 64-bit seed alone.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int uniform_int(int lo, int hi_inclusive) {
        return lo + static_cast<int>(next_u64() % static_cast<uint64_t>(hi_inclusive - lo + 1));
    }

    // Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Stateless mix of several 64-bit words into one seed; used to derive
// independent per-sample / per-step / per-layer streams from a global seed.
inline uint64_t seed_mix(uint64_t a) {
    a = (a ^ (a >> 33)) * 0xff51afd7ed558ccdull;
    a = (a ^ (a >> 33)) * 0xc4ceb9fe1a85ec53ull;
    return a ^ (a >> 33);
}

inline uint64_t seed_mix(uint64_t a, uint64_t b) { return seed_mix(a * 0x9e3779b97f4a7c15ull + b + 0x632be59bd9b4e019ull); }

inline uint64_t seed_mix(uint64_t a, uint64_t b, uint64_t c) { return seed_mix(seed_mix(a, b), c); }

inline uint64_t seed_mix(uint64_t a, uint64_t b, uint64_t c, uint64_t d) { return seed_mix(seed_mix(a, b, c), d); }

}  // namespace dfp
