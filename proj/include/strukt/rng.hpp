#pragma once

#include <cmath>
#include <cstdint>

namespace strukt {

// Minimal PCG32 (O'Neill). The generator is normative: seeded noise replicates
// must be reproducible bit-for-bit by independent implementations.
class Pcg32 {
public:
    explicit Pcg32(std::uint64_t initstate, std::uint64_t initseq = 0) { seed(initstate, initseq); }

    void seed(std::uint64_t initstate, std::uint64_t initseq) {
        state_ = 0u;
        inc_ = (initseq << 1u) | 1u;
        next_u32();
        state_ += initstate;
        next_u32();
    }

    std::uint32_t next_u32() {
        const std::uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        const std::uint32_t xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
        const std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    // Uniform double in [0,1), 32 bits of resolution.
    double next_double() { return std::ldexp(static_cast<double>(next_u32()), -32); }

private:
    std::uint64_t state_ = 0;
    std::uint64_t inc_ = 1;
};

// Standard normal variates via the polar (Marsaglia) method with a fixed
// rejection order: u then v per attempt, both halves of an accepted pair are
// consumed before the next draw.
class GaussianSampler {
public:
    explicit GaussianSampler(std::uint64_t initstate, std::uint64_t initseq = 0)
        : rng_(initstate, initseq) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * rng_.next_double() - 1.0;
            v = 2.0 * rng_.next_double() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

private:
    Pcg32 rng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace strukt
