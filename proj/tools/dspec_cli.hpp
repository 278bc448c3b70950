#pragma once

// Command-line front end.  run_cli() is separate from main() so tests can
// drive it in-process.

#include "dspec/bohl.hpp"
#include "dspec/bundles.hpp"
#include "dspec/dichotomy.hpp"
#include "dspec/errors.hpp"
#include "dspec/report_io.hpp"
#include "dspec/scenario.hpp"
#include "dspec/theorems.hpp"
#include "dspec/triangular.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace dspec::cli {

enum ExitCode { kOk = 0, kContainmentFailure = 1, kUsage = 2, kValidation = 3 };

struct Overrides {
    std::optional<std::int64_t> window;
    std::optional<std::int64_t> bohl_window;
    std::optional<int> grid_points;
    std::optional<double> refine_tol;
    std::optional<double> tail_fraction;
    bool two_sided = false;
    std::optional<std::uint64_t> seed;
    bool escalate = false;
    std::optional<std::string> out;
    std::optional<std::string> format;
    std::optional<unsigned> jobs;
    std::vector<double> xi;
    std::optional<double> gamma;
    std::optional<std::int64_t> period;
    std::string scenario_path;
};

inline void apply(const Overrides& o, Scenario& s) {
    auto& a = s.analysis;
    if (o.window) a.window = *o.window;
    if (o.bohl_window) a.bohl_window = *o.bohl_window;
    if (o.grid_points) a.grid_points = *o.grid_points;
    if (o.refine_tol) a.refine_tol = *o.refine_tol;
    if (o.tail_fraction) a.tail_fraction = *o.tail_fraction;
    if (o.two_sided) a.two_sided = true;
    if (o.seed) a.seed = *o.seed;
    if (o.escalate) a.escalate = true;
    if (o.jobs) a.jobs = *o.jobs;
    if (o.out) s.output.dir = *o.out;
    if (o.format) s.output.format = *o.format;
}

inline DichotomyParams dichotomy_params(const AnalysisSettings& a) {
    DichotomyParams p;
    p.window = a.window;
    p.theta_min = a.theta_min;
    p.rho_split = a.rho_split;
    p.delta_fit = a.delta_fit;
    return p;
}

inline SpectrumParams spectrum_params(const AnalysisSettings& a) {
    SpectrumParams p;
    p.grid_points = a.grid_points;
    p.refine_tol = a.refine_tol;
    p.dichotomy = dichotomy_params(a);
    p.jobs = a.jobs;
    return p;
}

inline BohlParams bohl_params(const AnalysisSettings& a) {
    return {a.bohl_window, a.gap_min, a.tail_fraction, a.two_sided};
}

inline VerifyParams verify_params(const AnalysisSettings& a) {
    VerifyParams p;
    p.bohl = bohl_params(a);
    p.bohl.two_sided = false;
    p.tol = a.tol;
    p.seed = a.seed;
    p.escalate = a.escalate;
    p.jobs = a.jobs;
    return p;
}

/// Prints the primary artifact to `out` and writes all artifacts to the
/// output directory when one is configured.
class Emitter {
public:
    Emitter(const Scenario& s, std::ostream& out) : s_(s), out_(out) {}

    void artifact(const std::string& file, const std::string& content) {
        if (s_.output.dir.empty()) return;
        std::filesystem::create_directories(s_.output.dir);
        const auto path = std::filesystem::path(s_.output.dir) / file;
        std::ofstream f(path, std::ios::binary);
        if (!f) throw ParameterError("cannot write " + path.string());
        f << content;
    }

    void json_artifact(const std::string& file, const Json& j) { artifact(file, j.dump(2) + "\n"); }

    /// Shows one of the three renderings according to --format.
    void show(const Json& j, const std::string& csv, const std::string& table) {
        const auto& f = s_.output.format;
        if (f == "json")
            out_ << j.dump(2) << '\n';
        else if (f == "csv")
            out_ << csv;
        else
            out_ << table;
    }

private:
    const Scenario& s_;
    std::ostream& out_;
};

inline int cmd_spectrum(const Scenario& s, Emitter& em) {
    const auto est = estimate_spectrum(s.sequence, spectrum_params(s.analysis));
    const Json j = spectrum_to_json(est);
    em.json_artifact("spectrum.json", j);
    em.artifact("verdicts.csv", spectrum_grid_csv(est));
    em.show(j, spectrum_grid_csv(est), spectrum_table(est));
    return kOk;
}

inline int cmd_bohl(const Scenario& s, const Overrides& o, Emitter& em) {
    const int d = s.sequence.dimension();
    if (static_cast<int>(o.xi.size()) != d)
        throw ParameterError("--xi needs " + std::to_string(d) + " comma-separated components");
    const Vector xi = Eigen::Map<const Vector>(o.xi.data(), d);
    const auto params = bohl_params(s.analysis);
    const auto est = bohl_exponents(s.sequence, xi, params);
    const std::int64_t n = params.window;
    const auto orbit = orbit_lognorms(s.sequence, xi, {params.two_sided ? -n : 0, n});
    const Json j = bohl_to_json(est, xi);
    em.json_artifact("bohl.json", j);
    em.artifact("envelope.csv", envelope_csv(est));
    em.artifact("orbit.csv", orbit_csv(orbit));
    std::ostringstream table;
    table.precision(10);
    table << "upper " << est.upper << "\nlower " << est.lower << "\ntail spread " << est.tail_spread() << '\n';
    em.show(j, envelope_csv(est), table.str());
    return kOk;
}

inline int cmd_dichotomy(const Scenario& s, const Overrides& o, Emitter& em) {
    if (!o.gamma) throw ParameterError("dichotomy needs --gamma");
    const auto v = test_dichotomy(s.sequence, *o.gamma, dichotomy_params(s.analysis));
    const Json j = verdict_to_json(v);
    em.json_artifact("dichotomy.json", j);
    std::ostringstream csv, table;
    csv << "gamma,outcome,rank,rho,K\n"
        << fmt17(v.gamma) << ',' << to_string(v.outcome) << ',' << v.rank << ',' << fmt17(v.rho) << ','
        << fmt17(v.K) << '\n';
    table.precision(10);
    table << "gamma " << v.gamma << ": " << to_string(v.outcome);
    if (v.is_certificate())
        table << ", rank " << v.rank << ", K " << v.K << ", rho " << v.rho;
    else
        table << " (" << to_string(v.reason) << ")";
    table << '\n';
    em.show(j, csv.str(), table.str());
    return kOk;
}

inline int cmd_bundles(const Scenario& s, Emitter& em) {
    const auto sp = spectrum_params(s.analysis);
    const DichotomyAnalyzer analyzer(s.sequence, sp.dichotomy);
    const auto est = estimate_spectrum(analyzer, sp);
    const auto fibers = bundle_fibers(est, gap_certificates(analyzer, est));
    const auto whitney = whitney_sum_check(fibers, s.sequence.dimension());
    const Json j = fibers_to_json(fibers, whitney);
    em.json_artifact("fibers.json", j);
    std::ostringstream csv, table;
    csv << "index,dimension,a,b\n";
    table.precision(10);
    for (const auto& f : fibers) {
        csv << f.index << ',' << f.dimension << ',' << fmt17(f.interval.a) << ',' << fmt17(f.interval.b) << '\n';
        table << "W_" << f.index << ": dim " << f.dimension << ", interval [" << f.interval.a << ", " << f.interval.b
              << "]\n";
    }
    table << "Whitney sum " << (whitney.pass ? "pass" : "FAIL") << ", sigma_min " << whitney.smallest_singular_value
          << '\n';
    em.show(j, csv.str(), table.str());
    return whitney.pass ? kOk : kContainmentFailure;
}

inline std::int64_t triangular_window(const AnalysisSettings& a) { return std::max(a.window, a.bohl_window); }

inline SignificanceParams significance_params(const AnalysisSettings& a) {
    SignificanceParams p;
    p.spectrum = spectrum_params(a);
    p.bohl = bohl_params(a);
    p.bohl.two_sided = true;
    p.tol = 5.0 * a.refine_tol;
    return p;
}

inline int cmd_triangularize(const Scenario& s, Emitter& em) {
    const auto kp = qr_triangularize(s.sequence, triangular_window(s.analysis));
    const auto rep = diagonal_significance(kp.U, significance_params(s.analysis));
    const auto sigma_a = estimate_spectrum(s.sequence, spectrum_params(s.analysis));
    Json j = significance_to_json(rep);
    j["sigma_a"] = intervals_to_json(sigma_a.intervals);
    j["spectrum_distance"] = hausdorff_distance(sigma_a.intervals, rep.sigma_u.intervals);
    j["window"] = kp.window.hi + 1;
    em.json_artifact("significance.json", j);
    em.artifact("u_diagonal.csv", u_diagonal_csv(kp));
    std::ostringstream table;
    table.precision(10);
    table << "diagonally significant: " << (rep.significant ? "yes" : "no") << " (Hausdorff " << rep.hausdorff
          << ", tol " << rep.tol << ")\n";
    for (std::size_t i = 0; i < rep.scalar_spectra.size(); ++i)
        table << "Sigma(u_" << i << i << ") = [" << rep.scalar_spectra[i].a << ", " << rep.scalar_spectra[i].b
              << "]\n";
    em.show(j, u_diagonal_csv(kp), table.str());
    return kOk;
}

inline int cmd_verify(const Scenario& s, Emitter& em) {
    const auto& a = s.analysis;
    const auto sp = spectrum_params(a);
    const DichotomyAnalyzer analyzer(s.sequence, sp.dichotomy);
    const auto est = estimate_spectrum(analyzer, sp);
    const auto fibers = bundle_fibers(est, gap_certificates(analyzer, est));
    const auto whitney = whitney_sum_check(fibers, s.sequence.dimension());
    const auto vp = verify_params(a);
    const auto t1 = verify_theorem1(s.sequence, est, fibers, a.samples_per_fiber, vp, s.name);
    const auto t2 = verify_theorem2(s.sequence, est, a.theorem2_samples, vp, s.name);

    std::optional<SignificanceReport> sig;
    if (!s.sequence.is_diagonal() && s.sequence.is_upper_triangular_kind())
        sig = diagonal_significance(s.sequence, significance_params(a));
    const double attain_tol = a.tol ? *a.tol : 5.0 * a.refine_tol;
    BohlParams ab = bohl_params(a);
    ab.two_sided = true;
    const auto attain = verify_endpoint_attainability(s.sequence, est, attain_tol, ab, sig ? &*sig : nullptr);

    const bool hard_failure = !t1.pass() || !t2.pass() || (attain.status != "refused" && !attain.pass());
    Json j = {{"system", s.name},
              {"pass", !hard_failure},
              {"spectrum", spectrum_to_json(est)},
              {"bundles", fibers_to_json(fibers, whitney)},
              {"theorem1", containment_to_json(t1)},
              {"theorem2", containment_to_json(t2)},
              {"attainability", attainability_to_json(attain)}};
    if (sig) j["significance"] = significance_to_json(*sig);
    em.json_artifact("verify.json", j);

    std::ostringstream csv, table;
    csv << "check,samples,failures,pass_rate\n"
        << "theorem1," << t1.rows.size() << ',' << t1.failures() << ',' << fmt17(t1.pass_rate()) << '\n'
        << "theorem2," << t2.rows.size() << ',' << t2.failures() << ',' << fmt17(t2.pass_rate()) << '\n';
    table << containment_table(t1) << containment_table(t2) << "attainability: " << attain.status
          << (attain.status == "refused" ? " (" + attain.reason + ")" : (attain.pass() ? ", all endpoints attained"
                                                                                        : ", endpoints missing"))
          << '\n'
          << (hard_failure ? "verify: FAIL\n" : "verify: pass\n");
    em.show(j, csv.str(), table.str());
    return hard_failure ? kContainmentFailure : kOk;
}

inline int cmd_oracle(const Scenario& s, const Overrides& o, Emitter& em) {
    std::int64_t p = 0;
    if (o.period)
        p = *o.period;
    else if (auto own = s.sequence.period())
        p = *own;
    else
        throw ParameterError("oracle needs a periodic sequence or --period");
    const auto pts = periodic_spectrum_oracle(s.sequence, p);
    const Json j = {{"period", p}, {"points", pts}};
    em.json_artifact("oracle.json", j);
    std::ostringstream csv, table;
    csv << "point\n";
    table.precision(12);
    for (double x : pts) {
        csv << fmt17(x) << '\n';
        table << x << '\n';
    }
    em.show(j, csv.str(), table.str());
    return kOk;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Dichotomy spectrum, Bohl exponents and spectral bundles of linear difference systems"};
    app.require_subcommand(1);
    Overrides o;

    const auto common = [&](CLI::App* sub) {
        sub->add_option("scenario", o.scenario_path, "Scenario JSON file")->required();
        sub->add_option("--window", o.window, "Dichotomy window N")->check(CLI::PositiveNumber);
        sub->add_option("--bohl-window", o.bohl_window, "Bohl window N")->check(CLI::PositiveNumber);
        sub->add_option("--grid-points", o.grid_points, "Initial gamma grid size")->check(CLI::PositiveNumber);
        sub->add_option("--refine-tol", o.refine_tol, "Endpoint refinement tolerance")->check(CLI::PositiveNumber);
        sub->add_option("--tail-fraction", o.tail_fraction, "Fraction of gaps aggregated in Bohl estimates");
        sub->add_flag("--two-sided", o.two_sided, "Bohl windows start on both half-lines");
        sub->add_option("--seed", o.seed, "Seed for sampling and random starts");
        sub->add_flag("--escalate", o.escalate, "Rerun containment failures at 4x window");
        sub->add_option("--out", o.out, "Directory for artifacts");
        sub->add_option("--format", o.format, "Console rendering")->check(CLI::IsMember({"json", "csv", "table"}));
        sub->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
    };
    auto* spectrum = app.add_subcommand("spectrum", "Estimate the dichotomy spectrum");
    auto* bohl = app.add_subcommand("bohl", "Bohl exponents of one solution");
    auto* dich = app.add_subcommand("dichotomy", "Dichotomy verdict at one gamma");
    auto* bundles = app.add_subcommand("bundles", "Spectral bundle fibers and Whitney-sum check");
    auto* tri = app.add_subcommand("triangularize", "Discrete QR triangularization and diagonal significance");
    auto* verify = app.add_subcommand("verify", "Containment checks and endpoint attainability");
    auto* oracle = app.add_subcommand("oracle", "Floquet points of a periodic system");
    for (auto* sub : {spectrum, bohl, dich, bundles, tri, verify, oracle}) common(sub);
    bohl->add_option("--xi", o.xi, "Initial vector, comma-separated")->delimiter(',')->required();
    dich->add_option("--gamma", o.gamma, "Scaling gamma > 0")->required();
    oracle->add_option("--period", o.period, "Period p (defaults to the sequence period)")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    }

    try {
        Scenario s = load_scenario(o.scenario_path);
        apply(o, s);
        Emitter em(s, out);
        if (spectrum->parsed()) return cmd_spectrum(s, em);
        if (bohl->parsed()) return cmd_bohl(s, o, em);
        if (dich->parsed()) return cmd_dichotomy(s, o, em);
        if (bundles->parsed()) return cmd_bundles(s, em);
        if (tri->parsed()) return cmd_triangularize(s, em);
        if (verify->parsed()) return cmd_verify(s, em);
        if (oracle->parsed()) return cmd_oracle(s, o, em);
    } catch (const ParameterError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const ValidationError& e) {
        err << "validation error: " << e.what() << '\n';
        return kValidation;
    } catch (const ConsistencyError& e) {
        err << "analysis error: " << e.what() << '\n';
        return kContainmentFailure;
    }
    return kUsage;
}

}  // namespace dspec::cli
