#pragma once

// JSON and CSV renderings of analysis results.  Matrices and bases are
// row-major arrays; doubles are written in shortest round-trip form.

#include "dspec/bohl.hpp"
#include "dspec/bundles.hpp"
#include "dspec/dichotomy.hpp"
#include "dspec/scenario.hpp"
#include "dspec/theorems.hpp"
#include "dspec/triangular.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace dspec {

/// Fixed 17-significant-digit rendering for CSV cells.
inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline Json basis_to_json(const Matrix& basis) {
    Json j = {{"rows", basis.rows()}, {"cols", basis.cols()}, {"data", Json::array()}};
    for (Eigen::Index i = 0; i < basis.rows(); ++i)
        for (Eigen::Index k = 0; k < basis.cols(); ++k) j["data"].push_back(basis(i, k));
    return j;
}

inline Json interval_to_json(const SpectralInterval& i) {
    return {{"a", i.a}, {"b", i.b}, {"low_confidence", i.low_confidence}};
}

inline Json intervals_to_json(const std::vector<SpectralInterval>& v) {
    Json out = Json::array();
    for (const auto& i : v) out.push_back(interval_to_json(i));
    return out;
}

inline Json spectrum_to_json(const SpectrumEstimate& est) {
    Json grid = Json::array();
    for (const auto& v : est.grid)
        grid.push_back({{"gamma", v.gamma},
                        {"outcome", to_string(v.outcome)},
                        {"rank", v.rank},
                        {"rho", v.rho},
                        {"K", v.K},
                        {"margin", v.margin},
                        {"reason", to_string(v.reason)},
                        {"refinement", v.refinement}});
    return {{"intervals", intervals_to_json(est.intervals)},
            {"gap_ranks", est.gap_ranks},
            {"refine_tol", est.refine_tol},
            {"m_hat", est.m_hat},
            {"window", est.window},
            {"low_confidence", est.low_confidence()},
            {"diagnostics", est.diagnostics},
            {"grid", grid}};
}

inline std::string spectrum_grid_csv(const SpectrumEstimate& est) {
    std::ostringstream out;
    out << "gamma,outcome,rank,rho,K\n";
    for (const auto& v : est.grid)
        out << fmt17(v.gamma) << ',' << to_string(v.outcome) << ',' << v.rank << ',' << fmt17(v.rho) << ','
            << fmt17(v.K) << '\n';
    return out.str();
}

inline std::string spectrum_table(const SpectrumEstimate& est) {
    std::ostringstream out;
    out << std::setprecision(8);
    out << "interval  a              b              flag\n";
    for (std::size_t i = 0; i < est.intervals.size(); ++i)
        out << std::left << std::setw(10) << i + 1 << std::setw(15) << est.intervals[i].a << std::setw(15)
            << est.intervals[i].b << (est.intervals[i].low_confidence ? "low-confidence" : "") << '\n';
    out << "gap ranks:";
    for (int r : est.gap_ranks) out << ' ' << r;
    out << "\nM_hat " << est.m_hat << ", window " << est.window << ", refine tol " << est.refine_tol << ", "
        << est.grid.size() << " verdicts\n";
    for (const auto& d : est.diagnostics) out << "note: " << d << '\n';
    return out.str();
}

inline Json verdict_to_json(const DichotomyVerdict& v) {
    Json j = {{"gamma", v.gamma},
              {"outcome", to_string(v.outcome)},
              {"window", v.window},
              {"margin", v.margin},
              {"low_confidence", v.low_confidence}};
    if (v.is_certificate()) {
        j["rank"] = v.rank;
        j["K"] = v.K;
        j["rho"] = v.rho;
        j["fit_residual"] = v.fit_residual;
        j["angle"] = v.angle;
        j["stable_basis"] = basis_to_json(v.stable_basis);
        j["unstable_basis"] = basis_to_json(v.unstable_basis);
    } else {
        j["reason"] = to_string(v.reason);
        if (v.rank >= 0) {
            j["rank"] = v.rank;
            j["rho"] = v.rho;
            j["fit_residual"] = v.fit_residual;
        }
    }
    return j;
}

inline Json bohl_to_json(const BohlEstimate& b, const Vector& xi) {
    std::vector<double> x(xi.data(), xi.data() + xi.size());
    return {{"xi", x},
            {"upper", b.upper},
            {"lower", b.lower},
            {"window", b.params.window},
            {"gap_min", b.params.gap_min},
            {"tail_fraction", b.params.tail_fraction},
            {"two_sided", b.params.two_sided},
            {"tail_start", b.tail_start},
            {"tail_spread", b.tail_spread()}};
}

inline std::string envelope_csv(const BohlEstimate& b) {
    std::ostringstream out;
    out << "g,min_rate,max_rate\n";
    for (const auto& e : b.envelopes) out << e.gap << ',' << fmt17(e.min_rate) << ',' << fmt17(e.max_rate) << '\n';
    return out.str();
}

inline std::string orbit_csv(const OrbitLog& orbit) {
    std::ostringstream out;
    out << "n,lognorm";
    const auto d = orbit.xi.size();
    for (Eigen::Index i = 0; i < d; ++i) out << ",dir" << i;
    out << '\n';
    for (std::int64_t n = orbit.range.lo; n <= orbit.range.hi; ++n) {
        out << n << ',' << fmt17(orbit.lognorm(n));
        const auto& dir = orbit.direction(n);
        for (Eigen::Index i = 0; i < d; ++i) out << ',' << fmt17(dir(i));
        out << '\n';
    }
    return out.str();
}

inline Json fibers_to_json(const std::vector<SpectralBundleFiber>& fibers, const WhitneyReport& w) {
    Json fs = Json::array();
    for (const auto& f : fibers)
        fs.push_back({{"index", f.index},
                      {"dimension", f.dimension},
                      {"interval", interval_to_json(f.interval)},
                      {"basis", basis_to_json(f.basis)}});
    Json angles = Json::array();
    for (const auto& a : w.pairwise_angles) angles.push_back({{"i", a.i}, {"j", a.j}, {"angle", a.angle}});
    return {{"fibers", fs},
            {"whitney",
             {{"pass", w.pass},
              {"dimension_sum", w.dimension_sum},
              {"dimension", w.dimension},
              {"smallest_singular_value", w.smallest_singular_value},
              {"threshold", w.threshold},
              {"pairwise_angles", angles}}}};
}

inline Json containment_to_json(const ContainmentReport& r) {
    Json rows = Json::array();
    for (const auto& row : r.rows) {
        std::vector<double> x(row.xi.data(), row.xi.data() + row.xi.size());
        Json j = {{"fiber", row.fiber}, {"xi", x},           {"lower", row.lower},       {"upper", row.upper},
                  {"a", row.a},         {"b", row.b},        {"tol", row.tol},           {"margin", row.margin},
                  {"upper_in", row.upper_in}, {"lower_in", row.lower_in}, {"pass", row.pass}};
        if (row.escalated) j["escalated_pass"] = row.escalated_pass;
        rows.push_back(std::move(j));
    }
    return {{"system", r.system_id},   {"check", r.check},         {"pass", r.pass()},
            {"pass_rate", r.pass_rate()}, {"failures", r.failures()}, {"low_confidence", r.low_confidence},
            {"notes", r.notes},        {"rows", rows}};
}

inline std::string containment_table(const ContainmentReport& r) {
    std::ostringstream out;
    out << std::setprecision(8);
    out << r.check << (r.system_id.empty() ? "" : " [" + r.system_id + "]") << ": " << r.rows.size() << " samples, "
        << r.failures() << " failures, pass rate " << r.pass_rate() << '\n';
    for (const auto& row : r.rows)
        if (!row.pass)
            out << "  FAIL fiber " << row.fiber << " [" << row.lower << ", " << row.upper << "] vs [" << row.a << ", "
                << row.b << "] tol " << row.tol << (row.escalated ? (row.escalated_pass ? " (escalated: pass)"
                                                                                         : " (escalated: fail)")
                                                                   : "")
                << '\n';
    for (const auto& n : r.notes) out << "  note: " << n << '\n';
    return out.str();
}

inline Json attainability_to_json(const AttainabilityReport& r) {
    Json ws = Json::array();
    for (const auto& w : r.witnesses)
        ws.push_back({{"interval", w.interval},
                      {"endpoint", w.left ? "a" : "b"},
                      {"target", w.target},
                      {"coordinate", w.coordinate},
                      {"value", w.value},
                      {"found", w.found}});
    return {{"status", r.status},
            {"reason", r.reason},
            {"pass", r.pass()},
            {"tol", r.tol},
            {"coordinate_exponents", intervals_to_json(r.coordinate_exponents)},
            {"witnesses", ws}};
}

inline Json significance_to_json(const SignificanceReport& r) {
    return {{"significant", r.significant},
            {"hausdorff", r.hausdorff},
            {"symmetric_difference", r.symmetric_difference},
            {"tol", r.tol},
            {"sigma_u", intervals_to_json(r.sigma_u.intervals)},
            {"gap_ranks", r.sigma_u.gap_ranks},
            {"scalar_spectra", intervals_to_json(r.scalar_spectra)},
            {"diagonal_union", intervals_to_json(r.diagonal_union)}};
}

inline std::string u_diagonal_csv(const KinematicPair& kp) {
    std::ostringstream out;
    const int d = kp.U.dimension();
    out << 'n';
    for (int i = 0; i < d; ++i) out << ",u" << i << i;
    out << '\n';
    for (std::int64_t n = kp.window.lo; n <= kp.window.hi; ++n) {
        const Matrix u = kp.U.raw_at(n);
        out << n;
        for (int i = 0; i < d; ++i) out << ',' << fmt17(u(i, i));
        out << '\n';
    }
    return out.str();
}

}  // namespace dspec
