#pragma once

// Transition operator X(m, n) and solution log-norm trajectories, computed
// factor by factor with power-of-two rescaling so that long products never
// overflow.

#include "dspec/errors.hpp"
#include "dspec/linalg.hpp"
#include "dspec/sequence.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace dspec {

/// Represents e^{log_scale} * core with ||core||_2 in [1/2, 2].
struct ScaledMatrix {
    Matrix core;
    double log_scale = 0.0;

    static ScaledMatrix identity(int d) { return {Matrix::Identity(d, d), 0.0}; }

    Matrix value() const { return std::exp(log_scale) * core; }

    /// log ||represented matrix||_2
    double log_norm() const { return log_scale + std::log(spectral_norm(core)); }

    /// Rescales the core by an exact power of two when its norm leaves [1/2, 2].
    void rescale() {
        const double frob = core.norm();
        if (frob == 0.0) return;
        const double root_d = std::sqrt(static_cast<double>(std::min(core.rows(), core.cols())));
        // Frobenius brackets the spectral norm: ||.||_F / sqrt(d) <= ||.||_2 <= ||.||_F.
        if (frob <= 2.0 && frob / root_d >= 0.5) return;
        const double s = spectral_norm(core);
        if (s >= 0.5 && s <= 2.0) return;
        const int k = static_cast<int>(std::lround(std::log2(s)));
        core = std::ldexp(1.0, -k) * core;
        log_scale += k * kLn2;
    }

    ScaledMatrix operator*(const ScaledMatrix& rhs) const {
        ScaledMatrix out{core * rhs.core, log_scale + rhs.log_scale};
        out.rescale();
        return out;
    }
};

/// ||a - b||_2 / ||b||_2 for scaled matrices, computed in b's scale.
inline double relative_difference(const ScaledMatrix& a, const ScaledMatrix& b) {
    const Matrix diff = std::exp(a.log_scale - b.log_scale) * a.core - b.core;
    return spectral_norm(diff) / spectral_norm(b.core);
}

struct TransitionOptions {
    std::int64_t window_cap = 1'000'000;
};

namespace detail {
inline void check_span(std::int64_t m, std::int64_t n, const TransitionOptions& opt) {
    const auto span = m > n ? m - n : n - m;
    if (span > opt.window_cap)
        throw ParameterError("transition: |m - n| = " + std::to_string(span) + " exceeds window cap " +
                             std::to_string(opt.window_cap));
}
}  // namespace detail

/// X(m, n): A(m-1)...A(n) for m > n, I for m = n, A^{-1}(m)...A^{-1}(n-1) for m < n.
inline ScaledMatrix transition(const MatrixSequence& seq, std::int64_t m, std::int64_t n,
                               const TransitionOptions& opt = {}) {
    detail::check_span(m, n, opt);
    ScaledMatrix x = ScaledMatrix::identity(seq.dimension());
    if (m > n) {
        for (std::int64_t k = n; k < m; ++k) {
            x.core = seq.at(k) * x.core;
            x.rescale();
        }
    } else if (m < n) {
        for (std::int64_t k = n - 1; k >= m; --k) {
            x.core = seq.inverse_at(k) * x.core;
            x.rescale();
        }
    }
    return x;
}

/// Same as transition() but reading factors from a precomputed window.
inline ScaledMatrix transition(const WindowCache& cache, std::int64_t m, std::int64_t n) {
    const auto d = cache.a(cache.range().lo).rows();
    ScaledMatrix x{Matrix::Identity(d, d), 0.0};
    if (m > n) {
        for (std::int64_t k = n; k < m; ++k) {
            x.core = cache.a(k) * x.core;
            x.rescale();
        }
    } else if (m < n) {
        for (std::int64_t k = n - 1; k >= m; --k) {
            x.core = cache.inv(k) * x.core;
            x.rescale();
        }
    }
    return x;
}

/// The solution n -> X(n, 0) xi on a range containing 0, stored as log-norms
/// and unit directions.
struct OrbitLog {
    Vector xi;
    IntRange range;
    std::vector<double> lognorms;    // lognorms[n - range.lo] = log ||X(n,0) xi||
    std::vector<Vector> directions;  // X(n,0) xi / ||X(n,0) xi||

    double lognorm(std::int64_t n) const { return lognorms[static_cast<std::size_t>(n - range.lo)]; }
    const Vector& direction(std::int64_t n) const { return directions[static_cast<std::size_t>(n - range.lo)]; }
};

namespace detail {
/// Log-growth increments of the orbit through xi relative to n = 0 (so the
/// value at 0 is exactly 0).  Starting from the normalised vector makes the
/// result invariant under xi -> c xi up to the rounding of xi / ||xi||.
/// `fwd(n)` and `inv(n)` return A(n) and A(n)^{-1}.
template <class Fwd, class Inv>
std::vector<double> relative_lognorms_with(Fwd&& fwd, Inv&& inv, Eigen::Index d, const Vector& xi, IntRange range,
                                           std::vector<Vector>* directions) {
    if (!range.contains(0)) throw ParameterError("orbit range must contain 0");
    if (xi.size() != d) throw ParameterError("xi has the wrong dimension");
    const double nrm = xi.norm();
    if (!(nrm > 0.0)) throw ParameterError("xi must be nonzero: Bohl exponents are undefined for the zero solution");
    std::vector<double> out(static_cast<std::size_t>(range.size()));
    if (directions) directions->assign(static_cast<std::size_t>(range.size()), Vector());
    const Vector unit = xi / nrm;
    const auto at = [&](std::int64_t n) -> std::size_t { return static_cast<std::size_t>(n - range.lo); };
    out[at(0)] = 0.0;
    if (directions) (*directions)[at(0)] = unit;
    Vector x = unit;
    double acc = 0.0;
    for (std::int64_t n = 0; n < range.hi; ++n) {
        x = fwd(n) * x;
        const double s = x.norm();
        acc += std::log(s);
        x /= s;
        out[at(n + 1)] = acc;
        if (directions) (*directions)[at(n + 1)] = x;
    }
    x = unit;
    acc = 0.0;
    for (std::int64_t n = -1; n >= range.lo; --n) {
        x = inv(n) * x;
        const double s = x.norm();
        acc += std::log(s);
        x /= s;
        out[at(n)] = acc;
        if (directions) (*directions)[at(n)] = x;
    }
    return out;
}

inline std::vector<double> relative_lognorms(const MatrixSequence& seq, const Vector& xi, IntRange range,
                                             std::vector<Vector>* directions = nullptr) {
    return relative_lognorms_with([&](std::int64_t n) { return seq.at(n); },
                                  [&](std::int64_t n) { return seq.inverse_at(n); }, seq.dimension(), xi, range,
                                  directions);
}

inline std::vector<double> relative_lognorms(const WindowCache& cache, const Vector& xi, IntRange range) {
    return relative_lognorms_with([&](std::int64_t n) -> const Matrix& { return cache.a(n); },
                                  [&](std::int64_t n) -> const Matrix& { return cache.inv(n); },
                                  cache.a(cache.range().lo).rows(), xi, range, nullptr);
}
}  // namespace detail

inline OrbitLog orbit_lognorms(const MatrixSequence& seq, const Vector& xi, IntRange range) {
    OrbitLog orbit;
    orbit.xi = xi;
    orbit.range = range;
    orbit.lognorms = detail::relative_lognorms(seq, xi, range, &orbit.directions);
    const double base = std::log(xi.norm());
    for (double& v : orbit.lognorms) v += base;
    return orbit;
}

}  // namespace dspec
