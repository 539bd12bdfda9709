#pragma once

#include <cstdint>
#include <random>

#include "kaicg/types.hpp"

namespace kaicg {

/// Seedable Gaussian stream on top of std::mt19937_64.
///
/// Uniform and normal deviates are produced by explicit bit-mapping and
/// Box-Muller rather than std::*_distribution, whose output sequences are
/// implementation-defined. Given a seed, the stream is reproducible.
class GaussianRng {
public:
    explicit GaussianRng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal deviate.
    double normal();

    /// Circular complex normal with unit variance: (re + j im)/sqrt(2).
    cxd complex_normal();

    /// Vector of iid unit-variance circular complex normals.
    CVector complex_normal_vector(int n);

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

/// Deterministic per-trial seed derived from a master seed and two indices.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b);

}  // namespace kaicg
