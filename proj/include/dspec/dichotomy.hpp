#pragma once

// Finite-window exponential-dichotomy certificates for the scaled system
// x(n+1) = A(n) x(n) / gamma, and the dichotomy spectrum as the set of
// gamma without a certificate.
//
// Splitting.  Since X_gamma(n, m) = gamma^{-(n-m)} X(n, m), the singular
// subspaces of X_gamma(+-N, 0) do not depend on gamma.  They are computed
// once by orthogonal iteration on the adjoint cocycle, sweeping from +N (and
// from -N) towards 0: the trailing r columns of the resulting orthonormal
// frame span the r least-expanded directions of X(N, 0), and the
// accumulated log-diagonals of the triangular factors approximate the log
// singular values.  This keeps the small singular directions accurate even
// when the singular values span hundreds of orders of magnitude.
//
// Decay fit.  For each candidate rank r the largest log-norm of
// X(k, l) P(l) (k >= l) and X(k, l)(I - P(l)) (k <= l) over k, l in
// [-N/2, N/2] is tabulated per gap |k - l| <= N/2.  Capping the gap at half
// the base range keeps every gap represented by windows on either side of 0.  A gamma shifts these by
// -+|k - l| log gamma, so each verdict is a cheap fit of K rho^{|k-l|}
// against cached data.

#include "dspec/bohl.hpp"
#include "dspec/errors.hpp"
#include "dspec/linalg.hpp"
#include "dspec/parallel.hpp"
#include "dspec/random.hpp"
#include "dspec/sequence.hpp"
#include "dspec/transition.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace dspec {

struct DichotomyParams {
    std::int64_t window = 256;  ///< N: splitting uses X(+-N, 0), fits use [-N/2, N/2]
    double theta_min = 1e-3;    ///< minimal angle between stable and unstable subspaces (radians)
    double rho_split = 1.0;     ///< split at singular values of X_gamma(+-N,0) below rho_split^N
    double delta_fit = 1e-4;    ///< certificate needs rho <= 1 - delta_fit
    double max_residual = 50.0; ///< RMS fit residual (nats) above which the fit is rejected
    std::uint64_t seed = 0x5eed;
};

enum class Outcome { certificate, in_spectrum };
enum class FailureReason { none, splitting_degenerate, decay_fit_failed, transversality_lost };

inline const char* to_string(Outcome o) { return o == Outcome::certificate ? "certificate" : "in_spectrum"; }
inline const char* to_string(FailureReason r) {
    switch (r) {
        case FailureReason::none: return "none";
        case FailureReason::splitting_degenerate: return "splitting-degenerate";
        case FailureReason::decay_fit_failed: return "decay-fit-failed";
        case FailureReason::transversality_lost: return "transversality-lost";
    }
    return "?";
}

struct DichotomyVerdict {
    double gamma = 1.0;
    Outcome outcome = Outcome::in_spectrum;
    // Certificate payload.  rank/K/rho/fit_residual are also filled for
    // decay-fit failures, for diagnostics.
    Matrix stable_basis;    ///< orthonormal basis of S(0) = im P(0)
    Matrix unstable_basis;  ///< orthonormal basis of U(0) = ker P(0)
    int rank = -1;
    double K = 0.0;
    double rho = 0.0;
    std::int64_t window = 0;
    double fit_residual = 0.0;
    double angle = 0.0;     ///< smallest principal angle between S(0) and U(0)
    // In-spectrum payload.
    FailureReason reason = FailureReason::none;
    double margin = 0.0;    ///< > 0 for certificates: (1 - delta_fit) - rho; < 0 otherwise
    bool low_confidence = false;

    bool is_certificate() const { return outcome == Outcome::certificate; }
};

// ---------------------------------------------------------------------------
// Decay constants

struct DecaySample {
    std::int64_t gap = 0;  ///< k - l (or l - k), >= 0
    double log_norm = 0.0;
};

struct DecayFit {
    double K = 0.0;
    double rho = 0.0;
    double residual = 0.0;  ///< RMS distance of the samples below the fitted line (log scale)
    bool failed = false;    ///< fitted log rho >= 0
};

/// Tightest line log K + t log rho lying above every sample: the supporting
/// line of the upper convex hull of (gap, log-norm) at the mean gap.
inline DecayFit fit_decay_constants(std::span<const DecaySample> samples) {
    std::map<std::int64_t, double> top;
    std::size_t finite = 0;
    for (const auto& s : samples) {
        if (!std::isfinite(s.log_norm)) continue;
        ++finite;
        auto [it, inserted] = top.emplace(s.gap, s.log_norm);
        if (!inserted) it->second = std::max(it->second, s.log_norm);
    }
    if (finite < 8) throw ParameterError("fit_decay_constants: need at least 8 finite samples");
    if (top.size() < 2) throw ParameterError("fit_decay_constants: samples must span at least two gaps");

    struct P {
        double t, y;
    };
    std::vector<P> hull;
    for (const auto& [g, y] : top) {
        const P p{static_cast<double>(g), y};
        while (hull.size() >= 2) {
            const P& a = hull[hull.size() - 2];
            const P& b = hull.back();
            // Drop b unless it lies strictly above segment a-p.
            const double cross = (b.t - a.t) * (p.y - a.y) - (b.y - a.y) * (p.t - a.t);
            if (cross >= 0.0)
                hull.pop_back();
            else
                break;
        }
        hull.push_back(p);
    }
    double mean_t = 0.0;
    for (const auto& [g, y] : top) mean_t += static_cast<double>(g);
    mean_t /= static_cast<double>(top.size());

    std::size_t e = 0;
    while (e + 2 < hull.size() && hull[e + 1].t < mean_t) ++e;
    const double slope = (hull[e + 1].y - hull[e].y) / (hull[e + 1].t - hull[e].t);
    const double intercept = hull[e].y - slope * hull[e].t;

    double ss = 0.0;
    for (const auto& s : samples) {
        if (!std::isfinite(s.log_norm)) continue;
        const double r = intercept + slope * static_cast<double>(s.gap) - s.log_norm;
        ss += r * r;
    }
    DecayFit fit;
    fit.K = std::exp(intercept);
    fit.rho = std::exp(slope);
    fit.residual = std::sqrt(ss / static_cast<double>(finite));
    fit.failed = !(slope < 0.0);
    return fit;
}

// ---------------------------------------------------------------------------
// Analyzer

class DichotomyAnalyzer {
public:
    explicit DichotomyAnalyzer(const MatrixSequence& seq, DichotomyParams params = {})
        : params_(params), dim_(seq.dimension()) {
        if (params_.window < 16) throw ParameterError("dichotomy window N must be >= 16");
        if (!(params_.rho_split > 0.0 && params_.rho_split <= 1.0))
            throw ParameterError("rho_split must lie in (0, 1]");
        if (!(params_.delta_fit >= 0.0 && params_.delta_fit < 1.0))
            throw ParameterError("delta_fit must lie in [0, 1)");
        const std::int64_t n = params_.window;
        half_ = n / 2;
        const WindowCache cache(seq, {-n, n - 1});
        m_hat_ = validate(seq, {-n, n - 1}).m_hat;
        sweep(cache);
        ranks_.reserve(static_cast<std::size_t>(dim_ + 1));
        for (int r = 0; r <= dim_; ++r) ranks_.push_back(build_rank(cache, r));
        forward_frames_.clear();
        backward_frames_.clear();
    }

    int dimension() const { return dim_; }
    double m_hat() const { return m_hat_; }
    const DichotomyParams& params() const { return params_; }

    /// Approximate log singular values of X(N, 0), descending.
    const std::vector<double>& forward_log_singular_values() const { return nu_; }
    /// Approximate log singular values of X(-N, 0), descending.
    const std::vector<double>& backward_log_singular_values() const { return mu_; }

    const Matrix& stable_basis(int rank) const { return ranks_.at(static_cast<std::size_t>(rank)).stable; }
    const Matrix& unstable_basis(int rank) const { return ranks_.at(static_cast<std::size_t>(rank)).unstable; }

    /// log ||X_gamma(k,l) P(l)|| samples (k >= l) for a candidate rank, max over l per gap.
    std::vector<DecaySample> stable_samples(int rank, double gamma) const {
        return samples(ranks_.at(static_cast<std::size_t>(rank)).max_stable, -std::log(gamma));
    }
    /// log ||X_gamma(k,l) (I - P(l))|| samples (k <= l), max over l per gap.
    std::vector<DecaySample> unstable_samples(int rank, double gamma) const {
        return samples(ranks_.at(static_cast<std::size_t>(rank)).max_unstable, std::log(gamma));
    }

    DichotomyVerdict test(double gamma) const {
        if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ParameterError("gamma must be a positive real");
        DichotomyVerdict v;
        v.gamma = gamma;
        v.window = params_.window;
        const double lg = std::log(gamma);
        const auto nd = static_cast<double>(params_.window);
        const double threshold = nd * std::log(params_.rho_split);

        // Trailing runs of small scaled singular values.
        int s = 0;
        while (s < dim_ && nu_[static_cast<std::size_t>(dim_ - 1 - s)] - nd * lg < threshold) ++s;
        int u = 0;
        while (u < dim_ && mu_[static_cast<std::size_t>(dim_ - 1 - u)] + nd * lg < threshold) ++u;

        double split_margin = std::numeric_limits<double>::infinity();
        bool all_near = true;
        for (int j = 0; j < dim_; ++j) {
            const double f = nu_[static_cast<std::size_t>(j)] - nd * lg - threshold;
            const double b = mu_[static_cast<std::size_t>(j)] + nd * lg - threshold;
            split_margin = std::min({split_margin, std::abs(f) / nd, std::abs(b) / nd});
            all_near = all_near && std::abs(f) < kLn2 && std::abs(b) < kLn2;
        }
        if (s + u != dim_) {
            v.reason = FailureReason::splitting_degenerate;
            v.margin = -split_margin;
            v.low_confidence = all_near;
            return v;
        }

        const int r = s;
        const auto& rd = ranks_[static_cast<std::size_t>(r)];
        v.rank = r;
        v.angle = rd.angle;
        if (!rd.transversal || rd.angle < params_.theta_min) {
            v.reason = FailureReason::transversality_lost;
            v.margin = rd.angle - params_.theta_min;
            return v;
        }

        double rho = 0.0, k = 0.0, residual = 0.0;
        bool failed = false;
        const auto absorb = [&](const DecayFit& f) {
            rho = std::max(rho, f.rho);
            k = std::max(k, f.K);
            residual = std::max(residual, f.residual);
            failed = failed || f.failed;
        };
        if (r > 0) absorb(fit_decay_constants(samples(rd.max_stable, -lg)));
        if (r < dim_) absorb(fit_decay_constants(samples(rd.max_unstable, lg)));
        v.K = k;
        v.rho = rho;
        v.fit_residual = residual;
        v.margin = (1.0 - params_.delta_fit) - rho;
        if (failed || v.margin < 0.0 || residual > params_.max_residual) {
            v.reason = FailureReason::decay_fit_failed;
            if (v.margin >= 0.0) v.margin = -residual;
            return v;
        }
        v.outcome = Outcome::certificate;
        v.stable_basis = rd.stable;
        v.unstable_basis = rd.unstable;
        return v;
    }

private:
    struct RankData {
        Matrix stable;    // S_r(0), d x r
        Matrix unstable;  // U_{d-r}(0), d x (d-r)
        double angle = M_PI / 2;
        bool transversal = true;
        std::vector<double> max_stable;    // index = gap
        std::vector<double> max_unstable;  // index = gap
    };

    static std::vector<DecaySample> samples(const std::vector<double>& table, double per_step) {
        std::vector<DecaySample> out;
        out.reserve(table.size());
        for (std::size_t t = 0; t < table.size(); ++t)
            if (std::isfinite(table[t]))
                out.push_back({static_cast<std::int64_t>(t), table[t] + per_step * static_cast<double>(t)});
        return out;
    }

    void sweep(const WindowCache& cache) {
        const std::int64_t n = params_.window;
        RandomStream rng(params_.seed, 0, 0xf1a9u);
        Matrix z = random_orthogonal(dim_, rng);
        Matrix y = random_orthogonal(dim_, rng);
        nu_.assign(static_cast<std::size_t>(dim_), 0.0);
        mu_.assign(static_cast<std::size_t>(dim_), 0.0);
        forward_frames_.assign(static_cast<std::size_t>(half_ + 1), Matrix());
        backward_frames_.assign(static_cast<std::size_t>(half_ + 1), Matrix());

        // Adjoint sweep of X(N, 0)^T = A(0)^T ... A(N-1)^T from N down to 0.
        for (std::int64_t k = n - 1; k >= 0; --k) {
            auto [q, r] = qr_positive(cache.a(k).transpose() * z);
            for (int j = 0; j < dim_; ++j) nu_[static_cast<std::size_t>(j)] += std::log(r(j, j));
            z = std::move(q);
            if (k <= half_) forward_frames_[static_cast<std::size_t>(k)] = z;
        }
        // Adjoint sweep of X(-N, 0)^T = A(-1)^{-T} ... A(-N)^{-T} from -N up to 0.
        for (std::int64_t k = -n; k <= -1; ++k) {
            auto [q, r] = qr_positive(cache.inv(k).transpose() * y);
            for (int j = 0; j < dim_; ++j) mu_[static_cast<std::size_t>(j)] += std::log(r(j, j));
            y = std::move(q);
            if (k + 1 >= -half_) backward_frames_[static_cast<std::size_t>(-(k + 1))] = y;
        }
        // The log-diagonals above carry an O(1) transient from the random
        // start.  Re-propagating the converged frames at 0 gives the singular
        // values without it.
        std::fill(nu_.begin(), nu_.end(), 0.0);
        std::fill(mu_.begin(), mu_.end(), 0.0);
        for (std::int64_t k = 0; k < n; ++k) {
            auto [q, r] = qr_positive(cache.a(k) * z);
            for (int j = 0; j < dim_; ++j) nu_[static_cast<std::size_t>(j)] += std::log(r(j, j));
            z = std::move(q);
        }
        for (std::int64_t k = -1; k >= -n; --k) {
            auto [q, r] = qr_positive(cache.inv(k) * y);
            for (int j = 0; j < dim_; ++j) mu_[static_cast<std::size_t>(j)] += std::log(r(j, j));
            y = std::move(q);
        }
    }

    RankData build_rank(const WindowCache& cache, int r) const {
        const std::int64_t w = half_;
        const int ud = dim_ - r;
        const auto slot = [w](std::int64_t n) { return static_cast<std::size_t>(n + w); };
        RankData rd;
        std::vector<Matrix> qs(static_cast<std::size_t>(2 * w + 1));
        std::vector<Matrix> qu(static_cast<std::size_t>(2 * w + 1));

        for (std::int64_t n = 0; n <= w; ++n) qs[slot(n)] = forward_frames_[static_cast<std::size_t>(n)].rightCols(r);
        for (std::int64_t n = -1; n >= -w; --n)
            qs[slot(n)] = r == 0 ? Matrix(dim_, 0) : qr_positive(cache.inv(n) * qs[slot(n + 1)]).first;
        for (std::int64_t n = 0; n >= -w; --n)
            qu[slot(n)] = backward_frames_[static_cast<std::size_t>(-n)].rightCols(ud);
        for (std::int64_t n = 1; n <= w; ++n)
            qu[slot(n)] = ud == 0 ? Matrix(dim_, 0) : qr_positive(cache.a(n - 1) * qu[slot(n - 1)]).first;

        rd.stable = qs[slot(0)];
        rd.unstable = qu[slot(0)];
        rd.angle = min_principal_angle(rd.stable, rd.unstable);

        // Rows of [Qs Qu]^{-1} selecting the stable / unstable coordinates.
        std::vector<Matrix> ws(qs.size()), wu(qs.size());
        for (std::int64_t l = -w; l <= w; ++l) {
            Matrix joined(dim_, dim_);
            joined << qs[slot(l)], qu[slot(l)];
            Eigen::FullPivLU<Matrix> lu(joined);
            if (!lu.isInvertible() || smallest_singular_value(joined) < 1e-12) {
                rd.transversal = false;
                return rd;
            }
            const Matrix inv = lu.inverse();
            ws[slot(l)] = inv.topRows(r);
            wu[slot(l)] = inv.bottomRows(ud);
        }

        const auto gaps = static_cast<std::size_t>(w + 1);
        const double ninf = -std::numeric_limits<double>::infinity();
        rd.max_stable.assign(gaps, ninf);
        rd.max_unstable.assign(gaps, ninf);

        if (r > 0) {
            // Forward steps restricted to S: A(n) Qs(n) = Qs(n+1) Rs(n).
            std::vector<Matrix> step(qs.size());
            for (std::int64_t n = -w; n < w; ++n)
                step[slot(n)] = qs[slot(n + 1)].transpose() * cache.a(n) * qs[slot(n)];
            for (std::int64_t l = -w; l <= w; ++l) {
                Matrix m = ws[slot(l)];
                double acc = 0.0;
                rd.max_stable[0] = std::max(rd.max_stable[0], std::log(spectral_norm(m)));
                for (std::int64_t k = l + 1; k <= std::min(w, l + w); ++k) {
                    m = step[slot(k - 1)] * m;
                    const double f = m.norm();
                    acc += std::log(f);
                    m /= f;
                    auto& cell = rd.max_stable[static_cast<std::size_t>(k - l)];
                    cell = std::max(cell, acc + std::log(spectral_norm(m)));
                }
            }
        }
        if (ud > 0) {
            // Backward steps restricted to U: A(n)^{-1} Qu(n+1) = Qu(n) Bu(n).
            std::vector<Matrix> step(qs.size());
            for (std::int64_t n = -w; n < w; ++n)
                step[slot(n)] = qu[slot(n)].transpose() * cache.inv(n) * qu[slot(n + 1)];
            for (std::int64_t l = -w; l <= w; ++l) {
                Matrix m = wu[slot(l)];
                double acc = 0.0;
                rd.max_unstable[0] = std::max(rd.max_unstable[0], std::log(spectral_norm(m)));
                for (std::int64_t k = l - 1; k >= std::max(-w, l - w); --k) {
                    m = step[slot(k)] * m;
                    const double f = m.norm();
                    acc += std::log(f);
                    m /= f;
                    auto& cell = rd.max_unstable[static_cast<std::size_t>(l - k)];
                    cell = std::max(cell, acc + std::log(spectral_norm(m)));
                }
            }
        }
        return rd;
    }

    DichotomyParams params_;
    int dim_;
    std::int64_t half_ = 0;
    double m_hat_ = 0.0;
    std::vector<double> nu_, mu_;
    std::vector<Matrix> forward_frames_;   // Z_n, n in [0, N/2]
    std::vector<Matrix> backward_frames_;  // Y_{-n}, n in [0, N/2]
    std::vector<RankData> ranks_;
};

inline DichotomyVerdict test_dichotomy(const MatrixSequence& seq, double gamma, const DichotomyParams& params = {}) {
    return DichotomyAnalyzer(seq, params).test(gamma);
}

// ---------------------------------------------------------------------------
// Spectrum

struct SpectrumParams {
    int grid_points = 96;
    double refine_tol = 1e-3;
    double log_margin = 0.25;  ///< grid extends this far beyond [1/M_hat, M_hat] in log scale
    DichotomyParams dichotomy;
    unsigned jobs = 1;
};

struct SpectralInterval {
    double a = 0.0;
    double b = 0.0;
    bool low_confidence = false;
};

struct GridVerdict {
    double gamma = 0.0;
    Outcome outcome = Outcome::in_spectrum;
    int rank = -1;
    double rho = 0.0;
    double K = 0.0;
    double margin = 0.0;
    FailureReason reason = FailureReason::none;
    bool refinement = false;  ///< added by endpoint refinement rather than the initial grid
};

struct SpectrumEstimate {
    std::vector<SpectralInterval> intervals;
    std::vector<int> gap_ranks;  ///< size intervals.size() + 1, from rho_0 to rho_l
    std::vector<GridVerdict> grid;
    double refine_tol = 0.0;
    double m_hat = 0.0;
    std::int64_t window = 0;
    std::vector<std::string> diagnostics;

    bool low_confidence() const {
        return std::any_of(intervals.begin(), intervals.end(), [](const auto& i) { return i.low_confidence; });
    }
};

namespace detail {

inline GridVerdict summarize(const DichotomyVerdict& v, bool refinement) {
    return {v.gamma, v.outcome, v.rank, v.rho, v.K, v.margin, v.reason, refinement};
}

inline bool same_class(const GridVerdict& a, const GridVerdict& b) {
    if (a.outcome != b.outcome) return false;
    return a.outcome == Outcome::in_spectrum || a.rank == b.rank;
}

}  // namespace detail

inline SpectrumEstimate estimate_spectrum(const DichotomyAnalyzer& analyzer, const SpectrumParams& params = {}) {
    if (params.grid_points < 3) throw ParameterError("estimate_spectrum: need at least 3 grid points");
    if (!(params.refine_tol > 0.0)) throw ParameterError("estimate_spectrum: refine_tol must be positive");
    const int d = analyzer.dimension();
    SpectrumEstimate est;
    est.refine_tol = params.refine_tol;
    est.m_hat = analyzer.m_hat();
    est.window = analyzer.params().window;

    const double span = std::log(est.m_hat) + params.log_margin;
    const auto g = static_cast<std::size_t>(params.grid_points);
    std::vector<GridVerdict> initial(g);
    parallel_for(g, params.jobs, [&](std::size_t i) {
        const double t = -span + 2.0 * span * static_cast<double>(i) / static_cast<double>(g - 1);
        initial[i] = detail::summarize(analyzer.test(std::exp(t)), false);
    });
    std::map<double, GridVerdict> verdicts;
    for (const auto& v : initial) verdicts.emplace(v.gamma, v);

    // Bisect every adjacent pair of differing verdicts (certificate vs
    // in-spectrum, or certificates of different rank) down to tol / 8.
    const double bracket = params.refine_tol / 8.0;
    for (int guard = 0; guard < 100000; ++guard) {
        bool inserted = false;
        for (auto it = verdicts.begin(); std::next(it) != verdicts.end(); ++it) {
            const auto nx = std::next(it);
            if (detail::same_class(it->second, nx->second)) continue;
            if (nx->first - it->first <= bracket) continue;
            const double mid = 0.5 * (it->first + nx->first);
            verdicts.emplace(mid, detail::summarize(analyzer.test(mid), true));
            inserted = true;
            break;
        }
        if (!inserted) break;
    }
    for (const auto& [gamma, v] : verdicts) est.grid.push_back(v);

    // Tokenize into gaps (runs of certificates of one rank) and intervals
    // (runs of in-spectrum verdicts, or a zero-width rank jump).
    struct Token {
        bool is_gap;
        int rank;
        double a, b;  // interval endpoints (for gaps: first/last gamma)
        bool low_confidence;
    };
    std::vector<Token> tokens;
    const auto& grid = est.grid;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto& v = grid[i];
        const bool cert = v.outcome == Outcome::certificate;
        if (!tokens.empty() && tokens.back().is_gap == cert && (!cert || tokens.back().rank == v.rank)) {
            tokens.back().b = v.gamma;
            continue;
        }
        if (cert && !tokens.empty() && tokens.back().is_gap) {
            // Rank jump between adjacent certificates: spectrum narrower than the bracket.
            const double mid = 0.5 * (grid[i - 1].gamma + v.gamma);
            tokens.push_back({false, -1, mid, mid, true});
        }
        tokens.push_back({cert, cert ? v.rank : -1, v.gamma, v.gamma, false});
    }
    // Interval endpoints sit midway between the bracketing verdicts.
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        auto& t = tokens[i];
        if (t.is_gap || t.low_confidence) continue;
        if (i > 0) t.a = 0.5 * (tokens[i - 1].b + t.a);
        if (i + 1 < tokens.size()) t.b = 0.5 * (t.b + tokens[i + 1].a);
    }

    const bool any_gap = std::any_of(tokens.begin(), tokens.end(), [](const Token& t) { return t.is_gap; });
    if (!any_gap) {
        est.intervals.push_back({grid.front().gamma, grid.back().gamma, true});
        est.gap_ranks = {0, d};
        est.diagnostics.push_back("no gamma in the grid admits a dichotomy; reporting the whole verdict range");
        return est;
    }
    if (!tokens.front().is_gap) {
        est.diagnostics.push_back("lowest grid gamma is in the spectrum; rho_0 not observed");
        tokens.front().low_confidence = true;
        tokens.insert(tokens.begin(), Token{true, 0, tokens.front().a, tokens.front().a, false});
    }
    if (!tokens.back().is_gap) {
        est.diagnostics.push_back("highest grid gamma is in the spectrum; rho_l not observed");
        tokens.back().low_confidence = true;
        tokens.push_back(Token{true, d, tokens.back().b, tokens.back().b, false});
    }

    // Merge intervals separated by a gap whose rank does not increase.
    for (bool merged = true; merged;) {
        merged = false;
        for (std::size_t i = 2; i + 2 < tokens.size(); i += 2) {
            if (tokens[i].rank > tokens[i - 2].rank) continue;
            std::ostringstream msg;
            msg << "merged spectral intervals across gap [" << tokens[i].a << ", " << tokens[i].b
                << "] whose rank " << tokens[i].rank << " does not exceed " << tokens[i - 2].rank;
            est.diagnostics.push_back(msg.str());
            tokens[i - 1].b = tokens[i + 1].b;
            tokens[i - 1].low_confidence = true;
            tokens.erase(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                         tokens.begin() + static_cast<std::ptrdiff_t>(i + 2));
            merged = true;
            break;
        }
    }

    std::vector<double> offending;
    for (std::size_t i = 0; i < tokens.size(); i += 2) {
        est.gap_ranks.push_back(tokens[i].rank);
        if (i + 1 < tokens.size())
            est.intervals.push_back({tokens[i + 1].a, tokens[i + 1].b, tokens[i + 1].low_confidence});
        if (i >= 2 && tokens[i].rank <= tokens[i - 2].rank) offending.push_back(tokens[i].a);
    }
    if (est.gap_ranks.front() != 0) offending.push_back(tokens.front().a);
    if (est.gap_ranks.back() != d) offending.push_back(tokens.back().b);
    if (!offending.empty()) {
        std::ostringstream msg;
        msg << "inconsistent dichotomy verdicts: non-monotone gap ranks near gamma =";
        for (double x : offending) msg << ' ' << x;
        throw ConsistencyError(msg.str());
    }
    return est;
}

inline SpectrumEstimate estimate_spectrum(const MatrixSequence& seq, const SpectrumParams& params = {}) {
    return estimate_spectrum(DichotomyAnalyzer(seq, params.dichotomy), params);
}

// ---------------------------------------------------------------------------
// Independent references

/// Floquet points {|lambda|^{1/p}} of the monodromy matrix X(p, 0).
inline std::vector<double> periodic_spectrum_oracle(const MatrixSequence& seq, std::int64_t p) {
    if (p < 1) throw ParameterError("periodic_spectrum_oracle: period must be >= 1");
    if (auto own = seq.period(); own && p % *own != 0)
        throw ParameterError("periodic_spectrum_oracle: p is not a multiple of the sequence period");
    if (!seq.period()) {
        for (std::int64_t n = 0; n < p; ++n)
            if ((seq.raw_at(n) - seq.raw_at(n + p)).norm() != 0.0)
                throw ValidationError("periodic_spectrum_oracle: sequence is not p-periodic");
    }
    const ScaledMatrix mono = transition(seq, p, 0);
    Eigen::EigenSolver<Matrix> es(mono.core, false);
    std::vector<double> pts;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double lm = std::log(std::abs(es.eigenvalues()(i))) + mono.log_scale;
        pts.push_back(std::exp(lm / static_cast<double>(p)));
    }
    std::sort(pts.begin(), pts.end());
    std::vector<double> unique;
    for (double x : pts)
        if (unique.empty() || x - unique.back() > 1e-9 * x) unique.push_back(x);
    return unique;
}

/// Sigma(u) = [lower, upper] Bohl exponents of a scalar equation, with
/// window starts on both half-lines.
inline SpectralInterval scalar_spectrum(const ScalarSequence& u, BohlParams params = {}) {
    params.two_sided = true;
    const BohlEstimate b = scalar_bohl(u, params);
    return {b.lower, b.upper, false};
}

}  // namespace dspec
