#pragma once

// Finite-window estimates of upper/lower Bohl exponents of single solutions
// and of the senior/junior general exponents of the whole system.
//
// The limsup/liminf over window lengths g = n - m is truncated to the top
// `tail_fraction` of the gaps in [L, N]; for each gap the extremal growth
// rate over all admissible window starts m is recorded, so the full
// per-gap envelope is available for convergence diagnostics.

#include "dspec/errors.hpp"
#include "dspec/linalg.hpp"
#include "dspec/sequence.hpp"
#include "dspec/transition.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace dspec {

struct BohlParams {
    std::int64_t window = 2048;   ///< N
    std::int64_t gap_min = 16;    ///< L
    double tail_fraction = 0.2;
    bool two_sided = false;       ///< window starts m over [-N, N-g] instead of [0, N-g]
};

struct GapEnvelope {
    std::int64_t gap = 0;
    double min_rate = 0.0;
    double max_rate = 0.0;
};

struct BohlEstimate {
    double upper = 0.0;
    double lower = 0.0;
    std::vector<GapEnvelope> envelopes;  // one per gap in [L, N]
    BohlParams params;
    std::int64_t tail_start = 0;         // first gap of the aggregated tail

    /// Largest (max_rate - min_rate) over the tail gaps.
    double tail_spread() const {
        double s = 0.0;
        for (const auto& e : envelopes)
            if (e.gap >= tail_start) s = std::max(s, e.max_rate - e.min_rate);
        return s;
    }
};

struct GeneralExponents {
    double senior = 0.0;  ///< Omega^0
    double junior = 0.0;  ///< omega_0
    BohlParams params;
};

namespace detail {

inline void check_bohl_params(const BohlParams& p) {
    if (p.gap_min < 1) throw ParameterError("Bohl: gap_min L must be >= 1");
    if (p.window < 2 * p.gap_min) throw ParameterError("Bohl: window N must be >= 2L");
    if (!(p.tail_fraction > 0.0 && p.tail_fraction < 1.0))
        throw ParameterError("Bohl: tail_fraction must lie in (0, 1)");
}

inline std::int64_t tail_start_gap(const BohlParams& p) {
    const std::int64_t count = p.window - p.gap_min + 1;
    const auto tail = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(p.tail_fraction * count)));
    return p.window - tail + 1;
}

/// `cum[k]` = log growth from index `first` to `first + k`.  Envelopes over
/// windows [m, m+g] with m in [m_lo, N-g].
inline BohlEstimate envelopes_from_cumulative(const std::vector<double>& cum, std::int64_t first,
                                              std::int64_t m_lo, const BohlParams& p) {
    BohlEstimate est;
    est.params = p;
    est.tail_start = tail_start_gap(p);
    est.upper = -std::numeric_limits<double>::infinity();
    est.lower = std::numeric_limits<double>::infinity();
    const std::int64_t n = p.window;
    est.envelopes.reserve(static_cast<std::size_t>(n - p.gap_min + 1));
    for (std::int64_t g = p.gap_min; g <= n; ++g) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::int64_t m = m_lo; m + g <= n; ++m) {
            const double diff = cum[static_cast<std::size_t>(m + g - first)] - cum[static_cast<std::size_t>(m - first)];
            lo = std::min(lo, diff);
            hi = std::max(hi, diff);
        }
        const GapEnvelope env{g, std::exp(lo / static_cast<double>(g)), std::exp(hi / static_cast<double>(g))};
        est.envelopes.push_back(env);
        if (g >= est.tail_start) {
            est.upper = std::max(est.upper, env.max_rate);
            est.lower = std::min(est.lower, env.min_rate);
        }
    }
    return est;
}

}  // namespace detail

/// Upper/lower Bohl exponents of the solution through xi.
inline BohlEstimate bohl_exponents(const MatrixSequence& seq, const Vector& xi, const BohlParams& params = {}) {
    detail::check_bohl_params(params);
    const std::int64_t n = params.window;
    const IntRange range{params.two_sided ? -n : 0, n};
    const auto cum = detail::relative_lognorms(seq, xi, range);
    return detail::envelopes_from_cumulative(cum, range.lo, range.lo, params);
}

/// Same, reading A(n) from a cache covering [-N, N-1] (or [0, N-1] one-sided).
inline BohlEstimate bohl_exponents(const WindowCache& cache, const Vector& xi, const BohlParams& params) {
    detail::check_bohl_params(params);
    const std::int64_t n = params.window;
    const IntRange range{params.two_sided ? -n : 0, n};
    const auto cum = detail::relative_lognorms(cache, xi, range);
    return detail::envelopes_from_cumulative(cum, range.lo, range.lo, params);
}

/// Bohl exponents of the scalar equation y(n+1) = u(n) y(n): extremal
/// geometric means of |u| over windows; independent of the initial value.
inline BohlEstimate scalar_bohl(const ScalarSequence& u, const BohlParams& params = {}) {
    detail::check_bohl_params(params);
    const std::int64_t n = params.window;
    const std::int64_t lo = params.two_sided ? -n : 0;
    std::vector<double> cum(static_cast<std::size_t>(n - lo + 1), 0.0);
    double acc = 0.0;
    for (std::int64_t k = lo; k < n; ++k) {
        const double v = u.at(k);
        if (v == 0.0 || !std::isfinite(v))
            throw ValidationError("scalar sequence vanishes or is not finite at n=" + std::to_string(k));
        acc += std::log(std::abs(v));
        cum[static_cast<std::size_t>(k + 1 - lo)] = acc;
    }
    return detail::envelopes_from_cumulative(cum, lo, lo, params);
}

/// Senior upper (Omega^0) and junior lower (omega_0) general exponents:
/// extremal rates of ||X(m+g, m)||^{1/g} and ||X(m, m+g)||^{-1/g}.
inline GeneralExponents general_exponents(const MatrixSequence& seq, const BohlParams& params = {},
                                          const TransitionOptions& opt = {}) {
    detail::check_bohl_params(params);
    const std::int64_t n = params.window;
    const std::int64_t m_lo = params.two_sided ? -n : 0;
    detail::check_span(n, m_lo, opt);
    const WindowCache cache(seq, {m_lo, n - 1});
    const int d = seq.dimension();
    const auto gaps = static_cast<std::size_t>(n + 1);
    std::vector<double> max_forward(gaps, -std::numeric_limits<double>::infinity());
    std::vector<double> max_inverse(gaps, -std::numeric_limits<double>::infinity());
    // Only the tail gaps enter the estimate.
    const std::int64_t tail = detail::tail_start_gap(params);
    for (std::int64_t m = m_lo; m + tail <= n; ++m) {
        ScaledMatrix fwd{Matrix::Identity(d, d), 0.0};
        ScaledMatrix inv{Matrix::Identity(d, d), 0.0};
        for (std::int64_t g = 1; m + g <= n; ++g) {
            fwd.core = cache.a(m + g - 1) * fwd.core;
            fwd.rescale();
            inv.core = inv.core * cache.inv(m + g - 1);
            inv.rescale();
            if (g >= tail) {
                auto& f = max_forward[static_cast<std::size_t>(g)];
                auto& b = max_inverse[static_cast<std::size_t>(g)];
                f = std::max(f, fwd.log_norm());
                b = std::max(b, inv.log_norm());
            }
        }
    }
    GeneralExponents out;
    out.params = params;
    out.senior = -std::numeric_limits<double>::infinity();
    out.junior = std::numeric_limits<double>::infinity();
    for (std::int64_t g = tail; g <= n; ++g) {
        const auto gd = static_cast<double>(g);
        out.senior = std::max(out.senior, std::exp(max_forward[static_cast<std::size_t>(g)] / gd));
        out.junior = std::min(out.junior, std::exp(-max_inverse[static_cast<std::size_t>(g)] / gd));
    }
    return out;
}

}  // namespace dspec
