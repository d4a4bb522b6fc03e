#pragma once

#include <cstdint>
#include <random>

#include "hem/matrix.hpp"

namespace hem {

// mt19937_64 raw output is fully specified by the standard; mapping the draws
// to doubles by hand keeps initialization bit-identical across standard
// libraries, unlike std::uniform_real_distribution.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1).
    double next_unit() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    Matrix uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi) {
        Matrix m(rows, cols);
        for (double& v : m.data()) {
            v = next_uniform(lo, hi);
        }
        return m;
    }

private:
    std::mt19937_64 engine_;
};

/// Derives an independent stream seed from a base seed and a role tag
/// (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t role) {
    std::uint64_t z = base + role * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace hem
