#pragma once

#include <cstdint>
#include <random>

namespace freeknot {

/// Seeded RNG with portable uniform mapping (does not depend on the
/// standard library's distribution implementations).
class rng {
public:
    explicit rng(std::uint64_t seed = 0) : gen_(seed) {}

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [a, b).
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Uniform integer in [lo, hi] (inclusive).
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(gen_() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

} // namespace freeknot
