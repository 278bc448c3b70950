#pragma once

// Invariant projectors built from dichotomy certificates, the spectral bundle
// fibers W_i(0) = ker P_{gamma_{i-1}}(0) ∩ im P_{gamma_i}(0), and the
// Whitney-sum check.

#include "dspec/dichotomy.hpp"
#include "dspec/errors.hpp"
#include "dspec/linalg.hpp"
#include "dspec/random.hpp"
#include "dspec/sequence.hpp"
#include "dspec/transition.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace dspec {

struct ProjectorFamily {
    double gamma = 1.0;
    int rank = 0;
    Matrix P0;
    Matrix stable;    ///< orthonormal basis of im P(0)
    Matrix unstable;  ///< orthonormal basis of ker P(0)

    static ProjectorFamily from_certificate(const DichotomyVerdict& v) {
        if (!v.is_certificate()) throw ParameterError("projector family needs a dichotomy certificate");
        ProjectorFamily f;
        f.gamma = v.gamma;
        f.rank = v.rank;
        f.stable = v.stable_basis;
        f.unstable = v.unstable_basis;
        f.P0 = oblique_projector(f.stable, f.unstable);
        return f;
    }
};

struct ProjectorDrift {
    double drift = 0.0;     ///< ||P^2 - P|| / max(1, ||P||) before repair
    bool repaired = false;
};

inline constexpr double kProjectorDriftSilent = 1e-9;
inline constexpr double kProjectorDriftLimit = 1e-6;

/// P(n) = X(n, 0) P(0) X(0, n).  Drift above 1e-9 is repaired by rounding the
/// singular structure back to a rank-r idempotent; above 1e-6 it is an error.
inline Matrix projector_at(const ProjectorFamily& fam, const MatrixSequence& seq, std::int64_t n,
                           ProjectorDrift* info = nullptr) {
    if (n == 0) {
        if (info) *info = {};
        return fam.P0;
    }
    const ScaledMatrix fwd = transition(seq, n, 0);
    const ScaledMatrix back = transition(seq, 0, n);
    Matrix p = std::exp(fwd.log_scale + back.log_scale) * (fwd.core * fam.P0 * back.core);
    const double drift = spectral_norm(p * p - p) / std::max(1.0, spectral_norm(p));
    ProjectorDrift local{drift, false};
    if (drift > kProjectorDriftLimit) {
        std::ostringstream msg;
        msg << "projector drift " << drift << " at n=" << n << " exceeds " << kProjectorDriftLimit
            << "; the window is too long for direct conjugation";
        throw ConsistencyError(msg.str());
    }
    if (drift > kProjectorDriftSilent) {
        const int d = static_cast<int>(p.rows());
        Eigen::JacobiSVD<Matrix> svd(p, Eigen::ComputeFullU | Eigen::ComputeFullV);
        p = oblique_projector(svd.matrixU().leftCols(fam.rank), svd.matrixV().rightCols(d - fam.rank));
        local.repaired = true;
    }
    if (info) *info = local;
    return p;
}

/// Orthonormal basis of X(n, 0) span(basis).
inline Matrix propagate_subspace(const MatrixSequence& seq, const Matrix& basis, std::int64_t n) {
    if (basis.cols() == 0) return basis;
    Matrix q = basis;
    if (n > 0) {
        for (std::int64_t k = 0; k < n; ++k) q = qr_positive(seq.at(k) * q).first;
    } else {
        for (std::int64_t k = -1; k >= n; --k) q = qr_positive(seq.inverse_at(k) * q).first;
    }
    return q;
}

// ---------------------------------------------------------------------------
// Nested stable/unstable frames along [0, H]

/// Orthonormal frames Z(n), V(n), n in [0, H], such that the trailing r
/// columns of Z(n) span the rank-r stable subspace at n and the leading k
/// columns of V(n) span the k-dimensional unstable subspace at n.  Stable
/// frames come from an adjoint sweep started `lead` steps beyond H, unstable
/// frames from a forward sweep started `lead` steps before 0, so both are
/// propagated in their numerically stable direction.
class FiberFlow {
public:
    FiberFlow(const MatrixSequence& seq, std::int64_t horizon, std::int64_t lead = 256, std::uint64_t seed = 0x5eed)
        : horizon_(horizon), dim_(seq.dimension()), cache_(seq, {-lead, horizon + lead - 1}) {
        if (horizon < 1 || lead < 1) throw ParameterError("FiberFlow: horizon and lead must be >= 1");
        RandomStream rng(seed, 1, 0xf1a9u);
        Matrix z = random_orthogonal(dim_, rng);
        Matrix y = random_orthogonal(dim_, rng);
        z_.assign(static_cast<std::size_t>(horizon + 1), Matrix());
        v_.assign(static_cast<std::size_t>(horizon + 1), Matrix());
        for (std::int64_t k = horizon + lead - 1; k >= 0; --k) {
            z = qr_positive(cache_.a(k).transpose() * z).first;
            if (k <= horizon) z_[static_cast<std::size_t>(k)] = z;
        }
        for (std::int64_t k = -lead; k <= -1; ++k) y = qr_positive(cache_.inv(k).transpose() * y).first;
        // Trailing columns of y are the forward-expanding directions; reverse
        // so the nested unstable subspaces are leading column spans.
        Matrix v = y.rowwise().reverse();
        for (std::int64_t n = 0; n <= horizon; ++n) {
            if (n > 0) v = qr_positive(cache_.a(n - 1) * v).first;
            v_[static_cast<std::size_t>(n)] = v;
        }
    }

    std::int64_t horizon() const { return horizon_; }
    const WindowCache& cache() const { return cache_; }

    /// P_r(n): projector onto the rank-r stable subspace along the unstable one.
    Matrix projector(int r, std::int64_t n) const {
        const auto& z = z_.at(static_cast<std::size_t>(n));
        const auto& v = v_.at(static_cast<std::size_t>(n));
        return oblique_projector(z.rightCols(r), v.leftCols(dim_ - r));
    }

    /// Projector onto im P_{r_hi}(n) ∩ ker P_{r_lo}(n) along the other fibers.
    Matrix fiber_projector(int r_lo, int r_hi, std::int64_t n) const {
        const Matrix id = Matrix::Identity(dim_, dim_);
        return projector(r_hi, n) * (id - projector(r_lo, n));
    }

private:
    std::int64_t horizon_;
    int dim_;
    WindowCache cache_;
    std::vector<Matrix> z_;
    std::vector<Matrix> v_;
};

// ---------------------------------------------------------------------------
// Certificates per resolvent gap

enum class GapPick { best_margin, lowest, highest };

/// One certificate per resolvent gap of `est` (ranks 0..d left to right),
/// chosen among the certified grid points and re-evaluated for its bases.
inline std::vector<DichotomyVerdict> gap_certificates(const DichotomyAnalyzer& analyzer, const SpectrumEstimate& est,
                                                      GapPick pick = GapPick::best_margin) {
    std::vector<DichotomyVerdict> out;
    const std::size_t gaps = est.intervals.size() + 1;
    for (std::size_t i = 0; i < gaps; ++i) {
        const double lo = i == 0 ? 0.0 : est.intervals[i - 1].b;
        const double hi = i < est.intervals.size() ? est.intervals[i].a : std::numeric_limits<double>::infinity();
        const int rank = est.gap_ranks[i];
        std::optional<GridVerdict> chosen;
        for (const auto& v : est.grid) {
            if (v.outcome != Outcome::certificate || v.rank != rank || v.gamma <= lo || v.gamma >= hi) continue;
            if (!chosen) {
                chosen = v;
                continue;
            }
            const bool better = pick == GapPick::best_margin ? v.margin > chosen->margin
                                : pick == GapPick::lowest    ? v.gamma < chosen->gamma
                                                             : v.gamma > chosen->gamma;
            if (better) chosen = v;
        }
        if (!chosen) {
            std::ostringstream msg;
            msg << "no certificate of rank " << rank << " found in resolvent gap " << i;
            throw ConsistencyError(msg.str());
        }
        out.push_back(analyzer.test(chosen->gamma));
        if (!out.back().is_certificate()) throw ConsistencyError("certificate did not reproduce on re-test");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fibers

struct SpectralBundleFiber {
    int index = 0;  ///< i in 1..l
    Matrix basis;   ///< orthonormal columns spanning W_i(0)
    int dimension = 0;
    SpectralInterval interval;
};

inline constexpr double kIntersectionCutoff = 1e-8;

/// Orthonormal basis of span(a) ∩ span(b) (both orthonormal, in R^d).
inline Matrix subspace_intersection(const Matrix& a, const Matrix& b, Eigen::Index d) {
    if (a.cols() == 0 || b.cols() == 0) return Matrix(d, 0);
    const Matrix ca = orthogonal_complement(a, d);
    const Matrix cb = orthogonal_complement(b, d);
    Matrix constraints(ca.cols() + cb.cols(), d);
    constraints << ca.transpose(), cb.transpose();
    return null_space(constraints, kIntersectionCutoff);
}

/// W_i(0) = ker P_{gamma_{i-1}}(0) ∩ im P_{gamma_i}(0) for i = 1..l, from
/// certificates ordered by gap (rank 0 first, rank d last).
inline std::vector<SpectralBundleFiber> bundle_fibers(const SpectrumEstimate& est,
                                                      const std::vector<DichotomyVerdict>& certs) {
    if (certs.size() != est.intervals.size() + 1)
        throw ParameterError("bundle_fibers: need one certificate per resolvent gap");
    for (const auto& c : certs)
        if (!c.is_certificate()) throw ParameterError("bundle_fibers: every gap needs a certificate");
    const Eigen::Index d = certs.front().stable_basis.rows();
    if (certs.front().rank != 0 || certs.back().rank != d)
        throw ConsistencyError("bundle_fibers: outer gaps must have ranks 0 and d");

    std::vector<SpectralBundleFiber> fibers;
    Eigen::Index total = 0;
    for (std::size_t i = 1; i < certs.size(); ++i) {
        SpectralBundleFiber f;
        f.index = static_cast<int>(i);
        f.basis = subspace_intersection(certs[i - 1].unstable_basis, certs[i].stable_basis, d);
        f.dimension = static_cast<int>(f.basis.cols());
        f.interval = est.intervals[i - 1];
        if (f.dimension != certs[i].rank - certs[i - 1].rank) {
            std::ostringstream msg;
            msg << "fiber W_" << i << " has dimension " << f.dimension << ", expected "
                << certs[i].rank - certs[i - 1].rank;
            throw ConsistencyError(msg.str());
        }
        total += f.dimension;
        fibers.push_back(std::move(f));
    }
    if (total != d) throw ConsistencyError("fiber dimensions do not sum to d");
    return fibers;
}

struct FiberAngle {
    int i = 0;
    int j = 0;
    double angle = 0.0;  ///< smallest principal angle
};

struct WhitneyReport {
    std::vector<FiberAngle> pairwise_angles;
    int dimension_sum = 0;
    int dimension = 0;
    double smallest_singular_value = 0.0;
    double threshold = 1e-3;
    bool pass = false;
};

inline WhitneyReport whitney_sum_check(const std::vector<SpectralBundleFiber>& fibers, int d,
                                       double threshold = 1e-3) {
    WhitneyReport rep;
    rep.dimension = d;
    rep.threshold = threshold;
    Eigen::Index cols = 0;
    for (const auto& f : fibers) cols += f.basis.cols();
    rep.dimension_sum = static_cast<int>(cols);
    Matrix stacked(d, cols);
    Eigen::Index at = 0;
    for (const auto& f : fibers) {
        stacked.middleCols(at, f.basis.cols()) = f.basis;
        at += f.basis.cols();
    }
    for (std::size_t i = 0; i < fibers.size(); ++i)
        for (std::size_t j = i + 1; j < fibers.size(); ++j)
            rep.pairwise_angles.push_back(
                {fibers[i].index, fibers[j].index, min_principal_angle(fibers[i].basis, fibers[j].basis)});
    if (cols == d && d > 0) {
        rep.smallest_singular_value = smallest_singular_value(stacked);
    } else if (cols > 0) {
        // Not square: report sigma_min of the d x cols stack (zero when rank-deficient).
        Eigen::JacobiSVD<Matrix> svd(stacked);
        const auto& s = svd.singularValues();
        rep.smallest_singular_value = s.size() < cols ? 0.0 : s.minCoeff();
    }
    rep.pass = rep.dimension_sum == d && rep.smallest_singular_value >= threshold;
    return rep;
}

}  // namespace dspec
