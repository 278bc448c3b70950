#pragma once

// Deterministic random streams.  std::mt19937_64 and std::seed_seq are
// specified bit-exactly by the standard; the real-valued conversions below
// are done by hand because the <random> distributions are not.

#include "dspec/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace dspec {

class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed, std::int64_t index = 0, std::uint32_t salt = 0) {
        const auto n = static_cast<std::uint64_t>(index);
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(n >> 32), salt};
        engine_.seed(seq);
    }

    /// Uniform on [0, 1).
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    /// Standard normal by Box-Muller (one variate per call).
    double normal() {
        double u1 = unit();
        while (u1 <= 0.0) u1 = unit();
        const double u2 = unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

/// Haar-ish random orthogonal matrix (QR of a Gaussian matrix).
inline Matrix random_orthogonal(Eigen::Index d, RandomStream& rng) {
    Matrix g(d, d);
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i < d; ++i) g(i, j) = rng.normal();
    return qr_positive(g).first;
}

/// Uniform direction on the unit sphere of R^d.
inline Vector random_unit_vector(Eigen::Index d, RandomStream& rng) {
    Vector v(d);
    do {
        for (Eigen::Index i = 0; i < d; ++i) v(i) = rng.normal();
    } while (v.norm() < 1e-8);
    return v / v.norm();
}

}  // namespace dspec
