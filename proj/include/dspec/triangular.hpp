#pragma once

// Kinematic similarity to an upper-triangular system by the discrete QR
// method, and the diagonal-significance check Sigma(U) = ∪ Sigma(u_ii).

#include "dspec/bohl.hpp"
#include "dspec/dichotomy.hpp"
#include "dspec/errors.hpp"
#include "dspec/linalg.hpp"
#include "dspec/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace dspec {

/// A(n) F(n) = F(n+1) U(n) on `window` (the range of n for U), F orthogonal.
struct KinematicPair {
    MatrixSequence U;
    std::vector<Matrix> F;  ///< F[n - window.lo] for n in [window.lo, window.hi + 1]
    IntRange window;

    const Matrix& f(std::int64_t n) const { return F.at(static_cast<std::size_t>(n - window.lo)); }
};

/// Discrete QR on [-N, N-1] anchored at F(0) = I with positive diagonals.
inline KinematicPair qr_triangularize(const MatrixSequence& seq, std::int64_t window) {
    if (window < 1) throw ParameterError("qr_triangularize: window must be >= 1");
    const int d = seq.dimension();
    const IntRange range{-window, window - 1};
    const WindowCache cache(seq, range);
    std::vector<Matrix> f(static_cast<std::size_t>(2 * window + 1));
    std::vector<Matrix> u(static_cast<std::size_t>(2 * window));
    const auto fi = [&](std::int64_t n) { return static_cast<std::size_t>(n + window); };

    f[fi(0)] = Matrix::Identity(d, d);
    for (std::int64_t n = 0; n < window; ++n) {
        auto [q, r] = qr_positive(cache.a(n) * f[fi(n)]);
        f[fi(n + 1)] = std::move(q);
        u[fi(n)] = std::move(r);
    }
    // A(n)^{-1} F(n+1) = F(n) T(n) with U(n) = T(n)^{-1}.
    for (std::int64_t n = -1; n >= -window; --n) {
        auto [q, t] = qr_positive(cache.inv(n) * f[fi(n + 1)]);
        Matrix ui = t.triangularView<Eigen::Upper>().solve(Matrix::Identity(d, d));
        ui.triangularView<Eigen::StrictlyLower>().setZero();
        f[fi(n)] = std::move(q);
        u[fi(n)] = std::move(ui);
    }
    return {MatrixSequence::tabulated(-window, std::move(u)), std::move(f), range};
}

// ---------------------------------------------------------------------------
// Interval-set comparisons

namespace detail {

inline double distance_to_set(double x, const std::vector<SpectralInterval>& set) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& i : set) best = std::min(best, x < i.a ? i.a - x : (x > i.b ? x - i.b : 0.0));
    return best;
}

/// sup over x in `from` of dist(x, `to`): attained at endpoints of `from`'s
/// intervals or at midpoints of gaps of `to` lying inside them.
inline double directed_hausdorff(const std::vector<SpectralInterval>& from, const std::vector<SpectralInterval>& to) {
    double worst = 0.0;
    for (const auto& i : from) {
        worst = std::max({worst, distance_to_set(i.a, to), distance_to_set(i.b, to)});
        for (std::size_t k = 0; k + 1 < to.size(); ++k) {
            const double mid = 0.5 * (to[k].b + to[k + 1].a);
            if (mid >= i.a && mid <= i.b) worst = std::max(worst, distance_to_set(mid, to));
        }
    }
    return worst;
}

inline double measure(const std::vector<SpectralInterval>& set) {
    double m = 0.0;
    for (const auto& i : set) m += i.b - i.a;
    return m;
}

}  // namespace detail

/// Sorted union of closed intervals.
inline std::vector<SpectralInterval> interval_union(std::vector<SpectralInterval> parts) {
    std::sort(parts.begin(), parts.end(), [](const auto& x, const auto& y) { return x.a < y.a; });
    std::vector<SpectralInterval> out;
    for (const auto& p : parts) {
        if (!out.empty() && p.a <= out.back().b) {
            out.back().b = std::max(out.back().b, p.b);
            out.back().low_confidence = out.back().low_confidence || p.low_confidence;
        } else {
            out.push_back(p);
        }
    }
    return out;
}

inline double hausdorff_distance(const std::vector<SpectralInterval>& x, const std::vector<SpectralInterval>& y) {
    if (x.empty() || y.empty()) return x.empty() && y.empty() ? 0.0 : std::numeric_limits<double>::infinity();
    return std::max(detail::directed_hausdorff(x, y), detail::directed_hausdorff(y, x));
}

/// Lebesgue measure of the symmetric difference of two interval unions.
inline double symmetric_difference_measure(const std::vector<SpectralInterval>& x,
                                           const std::vector<SpectralInterval>& y) {
    const auto ux = interval_union(x);
    const auto uy = interval_union(y);
    double overlap = 0.0;
    for (const auto& i : ux)
        for (const auto& j : uy) overlap += std::max(0.0, std::min(i.b, j.b) - std::max(i.a, j.a));
    return detail::measure(ux) + detail::measure(uy) - 2.0 * overlap;
}

// ---------------------------------------------------------------------------
// Diagonal significance

struct SignificanceParams {
    SpectrumParams spectrum;
    BohlParams bohl;
    double tol = 5e-3;  ///< Hausdorff tolerance for set equality
};

struct SignificanceReport {
    SpectrumEstimate sigma_u;
    std::vector<SpectralInterval> scalar_spectra;  ///< Sigma(u_ii), i = 0..d-1
    std::vector<SpectralInterval> diagonal_union;
    double hausdorff = 0.0;
    double symmetric_difference = 0.0;
    double tol = 0.0;
    bool significant = false;
};

inline SignificanceReport diagonal_significance(const MatrixSequence& u, const SignificanceParams& params = {}) {
    const int d = u.dimension();
    const std::int64_t reach = std::max(params.spectrum.dichotomy.window, params.bohl.window);
    const IntRange range{-reach, reach - 1};
    for (std::int64_t n = range.lo; n <= range.hi; ++n) {
        const Matrix a = u.raw_at(n);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < i; ++j)
                if (a(i, j) != 0.0)
                    throw ParameterError("diagonal_significance: U is not upper triangular at n=" + std::to_string(n));
    }
    SignificanceReport rep;
    rep.tol = params.tol;
    for (int i = 0; i < d; ++i) {
        const ScalarSequence diag = diagonal_sequence(u, i, range);
        for (std::int64_t n = range.lo; n <= range.hi; ++n)
            if (diag.at(n) == 0.0)
                throw ValidationError("diagonal coordinate " + std::to_string(i) + " vanishes at n=" +
                                      std::to_string(n));
        rep.scalar_spectra.push_back(scalar_spectrum(diag, params.bohl));
    }
    rep.diagonal_union = interval_union(rep.scalar_spectra);
    rep.sigma_u = estimate_spectrum(u, params.spectrum);
    rep.hausdorff = hausdorff_distance(rep.sigma_u.intervals, rep.diagonal_union);
    rep.symmetric_difference = symmetric_difference_measure(rep.sigma_u.intervals, rep.diagonal_union);
    rep.significant = rep.hausdorff <= params.tol;
    return rep;
}

}  // namespace dspec
