#pragma once

#include <cstdint>
#include <random>

namespace pour {

// mt19937_64 with hand-rolled scalar draws. std distributions are
// implementation-defined, so synthesis and RANSAC would not reproduce
// bit-exactly across standard libraries; these draws do.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; draws are paired internally.
    double normal();

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t index(std::uint64_t n) { return gen_() % n; }

    /// Independent stream derived from this generator's seed.
    Rng derive(std::uint64_t stream) const;

private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// splitmix64 finalizer; used for seed derivation.
std::uint64_t mix64(std::uint64_t x);

}  // namespace pour
