#include "kaicg/rng.hpp"

#include <cmath>

namespace kaicg {

double GaussianRng::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    // Box-Muller; u1 pulled away from 0 so the log stays finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * kPi * u2;
    cached_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
}

cxd GaussianRng::complex_normal() {
    const double re = normal();
    const double im = normal();
    return cxd(re, im) / std::sqrt(2.0);
}

CVector GaussianRng::complex_normal_vector(int n) {
    CVector v(n);
    for (int i = 0; i < n; ++i) v[i] = complex_normal();
    return v;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    std::uint64_t state = master;
    std::uint64_t h = splitmix64(state);
    state = h ^ ((a + 1) * 0xD6E8FEB86659FD93ULL);
    h = splitmix64(state);
    state = h ^ ((b + 1) * 0xA3B195354A39B70DULL);
    return splitmix64(state);
}

}  // namespace kaicg
