#pragma once

// Containment checks of Bohl exponents against spectral intervals:
//   xi in W_i(0)  =>  [beta_lower(xi), beta_upper(xi)] ⊆ [a_i, b_i]
//   xi != 0       =>  [beta_lower(xi), beta_upper(xi)] ⊆ [a_1, b_l]
// and the search for solutions attaining the interval endpoints.

#include "dspec/bohl.hpp"
#include "dspec/bundles.hpp"
#include "dspec/dichotomy.hpp"
#include "dspec/errors.hpp"
#include "dspec/linalg.hpp"
#include "dspec/parallel.hpp"
#include "dspec/random.hpp"
#include "dspec/sequence.hpp"
#include "dspec/triangular.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dspec {

struct VerifyParams {
    BohlParams bohl{1024, 16, 0.2, false};
    std::optional<double> tol;  ///< fixed tolerance; default 5 refine_tol + envelope spread at gap N
    std::uint64_t seed = 0;
    bool escalate = false;      ///< rerun failures at 4x the Bohl window
    unsigned jobs = 1;
};

struct ContainmentRow {
    int fiber = 0;  ///< W_i index; 0 for whole-space samples
    Vector xi;
    double lower = 0.0;
    double upper = 0.0;
    double a = 0.0;  ///< target interval
    double b = 0.0;
    double tol = 0.0;
    double margin = 0.0;  ///< min(lower - a, b - upper); pass iff margin >= -tol
    bool upper_in = false;
    bool lower_in = false;
    bool pass = false;
    bool escalated = false;
    bool escalated_pass = false;
};

struct ContainmentReport {
    std::string system_id;
    std::string check;
    std::vector<ContainmentRow> rows;
    std::vector<std::string> notes;
    bool low_confidence = false;

    std::size_t failures() const {
        return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) {
            return !r.pass && !(r.escalated && r.escalated_pass);
        }));
    }
    double pass_rate() const {
        if (rows.empty()) return 1.0;
        const auto ok = std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.pass; });
        return static_cast<double>(ok) / static_cast<double>(rows.size());
    }
    bool pass() const { return failures() == 0; }
};

namespace detail {

inline void fill_containment(ContainmentRow& row, const BohlEstimate& b, double refine_tol,
                             const std::optional<double>& fixed) {
    row.lower = b.lower;
    row.upper = b.upper;
    const auto& last = b.envelopes.back();
    row.tol = fixed ? *fixed : 5.0 * refine_tol + (last.max_rate - last.min_rate);
    row.upper_in = row.upper >= row.a - row.tol && row.upper <= row.b + row.tol;
    row.lower_in = row.lower >= row.a - row.tol && row.lower <= row.b + row.tol;
    row.margin = std::min(row.lower - row.a, row.b - row.upper);
    row.pass = row.upper_in && row.lower_in;
}

/// `estimate(row, bohl)` returns the Bohl estimate for row.xi at the given window.
template <class Estimate>
void run_rows(std::vector<ContainmentRow>& rows, double refine_tol, const VerifyParams& params, Estimate&& estimate) {
    parallel_for(rows.size(), params.jobs, [&](std::size_t k) {
        auto& row = rows[k];
        fill_containment(row, estimate(row, params.bohl), refine_tol, params.tol);
    });
    if (!params.escalate) return;
    BohlParams wide = params.bohl;
    wide.window *= 4;
    parallel_for(rows.size(), params.jobs, [&](std::size_t k) {
        auto& row = rows[k];
        if (row.pass) return;
        ContainmentRow retry = row;
        fill_containment(retry, estimate(row, wide), refine_tol, params.tol);
        row.escalated = true;
        row.escalated_pass = retry.pass;
    });
}

/// Bohl exponents (window starts m >= 0) of the solution through xi in a
/// fiber, keeping the orbit in the fiber by applying its projector after
/// every step.  Without this, rounding components along faster fibers grow
/// geometrically and take over the orbit within a few hundred steps.
inline BohlEstimate fiber_bohl(const WindowCache& cache, const std::vector<Matrix>& projectors, const Vector& xi,
                               const BohlParams& params) {
    check_bohl_params(params);
    const std::int64_t n = params.window;
    if (static_cast<std::int64_t>(projectors.size()) <= n) throw ParameterError("fiber_bohl: projectors too short");
    std::vector<double> cum(static_cast<std::size_t>(n + 1), 0.0);
    Vector x = projectors[0] * xi;
    x /= x.norm();
    double acc = 0.0;
    for (std::int64_t k = 0; k < n; ++k) {
        x = projectors[static_cast<std::size_t>(k + 1)] * (cache.a(k) * x);
        const double s = x.norm();
        acc += std::log(s);
        x /= s;
        cum[static_cast<std::size_t>(k + 1)] = acc;
    }
    return envelopes_from_cumulative(cum, 0, 0, params);
}

/// Random unit vector in span(basis): normal coefficients, normalised.
inline Vector sample_in_span(const Matrix& basis, RandomStream& rng) {
    for (;;) {
        Vector c(basis.cols());
        for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = rng.normal();
        Vector v = basis * c;
        const double n = v.norm();
        if (n > 1e-8) return v / n;
    }
}

}  // namespace detail

inline ContainmentReport verify_theorem1(const MatrixSequence& seq, const SpectrumEstimate& est,
                                         const std::vector<SpectralBundleFiber>& fibers, int samples_per_fiber,
                                         const VerifyParams& params = {}, std::string system_id = {}) {
    if (samples_per_fiber < 1) throw ParameterError("verify_theorem1: samples_per_fiber must be >= 1");
    ContainmentReport rep;
    rep.system_id = std::move(system_id);
    rep.check = "theorem1";
    rep.low_confidence = est.low_confidence();
    if (rep.low_confidence) rep.notes.push_back("spectrum estimate is low-confidence");
    const int d = seq.dimension();
    for (const auto& f : fibers) {
        if (f.dimension == 0) {
            rep.notes.push_back("fiber W_" + std::to_string(f.index) + " is empty; skipped");
            continue;
        }
        for (int s = 0; s < samples_per_fiber; ++s) {
            RandomStream rng(params.seed, static_cast<std::uint64_t>(f.index) * 1'000'003u + static_cast<std::uint64_t>(s),
                             0x7e01u);
            ContainmentRow row;
            row.fiber = f.index;
            row.xi = detail::sample_in_span(f.basis, rng);
            row.a = f.interval.a;
            row.b = f.interval.b;
            rep.rows.push_back(std::move(row));
        }
    }
    if (rep.rows.empty()) return rep;

    // Fiber projectors along [0, H] for the base and (if needed) escalated window.
    std::vector<int> rank_below;
    int acc = 0;
    for (const auto& f : fibers) {
        rank_below.push_back(acc);
        acc += f.dimension;
    }
    if (acc != d) throw ConsistencyError("verify_theorem1: fiber dimensions do not sum to d");
    struct Flow {
        std::int64_t horizon = 0;
        std::optional<FiberFlow> flow;
        std::vector<std::vector<Matrix>> projectors;  // per fiber
    };
    std::vector<Flow> flows;
    flows.reserve(2);
    const auto flow_for = [&](std::int64_t horizon) -> const Flow& {
        for (const auto& fl : flows)
            if (fl.horizon == horizon) return fl;
        Flow fl;
        fl.horizon = horizon;
        fl.flow.emplace(seq, horizon, 256, params.seed);
        for (std::size_t i = 0; i < fibers.size(); ++i) {
            std::vector<Matrix> ps(static_cast<std::size_t>(horizon + 1));
            parallel_for(ps.size(), params.jobs, [&](std::size_t n) {
                ps[n] = fl.flow->fiber_projector(rank_below[i], rank_below[i] + fibers[i].dimension,
                                                 static_cast<std::int64_t>(n));
            });
            fl.projectors.push_back(std::move(ps));
        }
        flows.push_back(std::move(fl));
        return flows.back();
    };
    flow_for(params.bohl.window);
    if (params.escalate) flow_for(4 * params.bohl.window);
    detail::run_rows(rep.rows, est.refine_tol, params, [&](const ContainmentRow& row, const BohlParams& b) {
        const Flow& fl = flow_for(b.window);
        std::size_t i = 0;
        while (fibers[i].index != row.fiber) ++i;
        return detail::fiber_bohl(fl.flow->cache(), fl.projectors[i], row.xi, b);
    });
    return rep;
}

inline ContainmentReport verify_theorem2(const MatrixSequence& seq, const SpectrumEstimate& est, int samples,
                                         const VerifyParams& params = {}, std::string system_id = {}) {
    if (est.intervals.empty()) throw ParameterError("verify_theorem2: spectrum has no intervals");
    if (samples < 1) throw ParameterError("verify_theorem2: samples must be >= 1");
    ContainmentReport rep;
    rep.system_id = std::move(system_id);
    rep.check = "theorem2";
    rep.low_confidence = est.low_confidence();
    if (rep.low_confidence) rep.notes.push_back("spectrum estimate is low-confidence");
    const int d = seq.dimension();
    const Matrix whole = Matrix::Identity(d, d);
    for (int s = 0; s < samples; ++s) {
        RandomStream rng(params.seed, static_cast<std::uint64_t>(s), 0x7e02u);
        ContainmentRow row;
        row.xi = detail::sample_in_span(whole, rng);
        row.a = est.intervals.front().a;
        row.b = est.intervals.back().b;
        rep.rows.push_back(std::move(row));
    }
    const std::int64_t reach = params.escalate ? 4 * params.bohl.window : params.bohl.window;
    const WindowCache cache(seq, {0, reach - 1});
    detail::run_rows(rep.rows, est.refine_tol, params,
                     [&](const ContainmentRow& row, const BohlParams& b) { return bohl_exponents(cache, row.xi, b); });
    return rep;
}

// ---------------------------------------------------------------------------
// Endpoint attainability

struct EndpointWitness {
    int interval = 0;     ///< 1-based interval index
    bool left = true;     ///< a_i (attained by a lower exponent) or b_i (upper)
    double target = 0.0;
    int coordinate = -1;  ///< witness direction e_j / diagonal entry u_jj; -1 if none found
    double value = 0.0;   ///< exponent of the witness
    bool found = false;
};

struct AttainabilityReport {
    std::string status;  ///< "diagonal", "triangular" or "refused"
    std::string reason;
    std::vector<EndpointWitness> witnesses;
    std::vector<SpectralInterval> coordinate_exponents;  ///< [lower, upper] per coordinate
    double tol = 0.0;

    bool pass() const {
        return status != "refused" &&
               std::all_of(witnesses.begin(), witnesses.end(), [](const auto& w) { return w.found; });
    }
};

/// Searches coordinate directions (diagonal systems) or diagonal entries of a
/// diagonally significant triangular system for solutions whose whole-line
/// Bohl exponents hit each interval endpoint within tol.
inline AttainabilityReport verify_endpoint_attainability(const MatrixSequence& seq, const SpectrumEstimate& est,
                                                         double tol, BohlParams bohl = {1024, 16, 0.2, true},
                                                         const SignificanceReport* significance = nullptr) {
    AttainabilityReport rep;
    rep.tol = tol;
    bohl.two_sided = true;
    const int d = seq.dimension();
    if (seq.is_diagonal()) {
        rep.status = "diagonal";
        for (int j = 0; j < d; ++j) {
            const BohlEstimate b = bohl_exponents(seq, Vector::Unit(d, j), bohl);
            rep.coordinate_exponents.push_back({b.lower, b.upper, false});
        }
    } else if (significance) {
        if (!significance->significant) {
            rep.status = "refused";
            rep.reason = "diagonal significance not confirmed; endpoint attainability is open for this system";
            return rep;
        }
        rep.status = "triangular";
        rep.coordinate_exponents = significance->scalar_spectra;
    } else {
        rep.status = "refused";
        rep.reason = "system is neither diagonal nor accompanied by a diagonal-significance report";
        return rep;
    }
    for (std::size_t i = 0; i < est.intervals.size(); ++i) {
        for (const bool left : {true, false}) {
            EndpointWitness w;
            w.interval = static_cast<int>(i + 1);
            w.left = left;
            w.target = left ? est.intervals[i].a : est.intervals[i].b;
            double best = std::numeric_limits<double>::infinity();
            for (int j = 0; j < d; ++j) {
                const auto& ce = rep.coordinate_exponents[static_cast<std::size_t>(j)];
                const double value = left ? ce.a : ce.b;
                const double err = std::abs(value - w.target);
                if (err < best) {
                    best = err;
                    w.coordinate = j;
                    w.value = value;
                }
            }
            w.found = best <= tol;
            if (!w.found) w.coordinate = -1;
            rep.witnesses.push_back(w);
        }
    }
    return rep;
}

}  // namespace dspec
