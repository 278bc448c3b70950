#include "dspec/dichotomy.hpp"
#include "support/oracles.hpp"

#include <catch_amalgamated.hpp>

using namespace dspec;
using Catch::Matchers::WithinAbs;

namespace {

Matrix diag(std::initializer_list<double> v) {
    Vector x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double e : v) x(i++) = e;
    return x.asDiagonal();
}

MatrixSequence seeded_periodic_2x2() { return MatrixSequence::seeded_random({42, 3, {{0.4, 0.6}, {1.5, 2.0}}, 0.15}); }

bool inside(const std::vector<SpectralInterval>& iv, double x, double tol) {
    for (const auto& i : iv)
        if (x >= i.a - tol && x <= i.b + tol) return true;
    return false;
}

}  // namespace

TEST_CASE("decay fit on exact log-linear data", "[dichotomy]") {
    std::vector<DecaySample> s;
    for (int t = 0; t <= 20; ++t) s.push_back({t, t * std::log(0.5)});
    auto f = fit_decay_constants(s);
    CHECK_THAT(f.K, WithinAbs(1.0, 1e-12));
    CHECK_THAT(f.rho, WithinAbs(0.5, 1e-12));
    CHECK_THAT(f.residual, WithinAbs(0.0, 1e-12));
    CHECK_FALSE(f.failed);

    s.clear();
    for (int t = 0; t <= 20; ++t) s.push_back({t, std::log(3.0) + t * std::log(0.8)});
    f = fit_decay_constants(s);
    CHECK_THAT(f.K, WithinAbs(3.0, 1e-10));
    CHECK_THAT(f.rho, WithinAbs(0.8, 1e-10));

    s.clear();
    for (int t = 0; t <= 20; ++t) s.push_back({t, 0.1 * t});
    CHECK(fit_decay_constants(s).failed);

    CHECK_THROWS_AS(fit_decay_constants(std::vector<DecaySample>(3, {1, 0.0})), ParameterError);
    CHECK_THROWS_AS(fit_decay_constants(std::vector<DecaySample>(10, {1, 0.0})), ParameterError);
}

TEST_CASE("decay fit lies above every sample", "[dichotomy][property]") {
    RandomStream rng(3, 0, 0xf1);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<DecaySample> s;
        const double slope = -rng.uniform(0.05, 1.0);
        for (int t = 0; t < 60; ++t) s.push_back({t, rng.uniform(-0.5, 0.5) + slope * t});
        const auto f = fit_decay_constants(s);
        for (const auto& x : s) CHECK(x.log_norm <= std::log(f.K) + x.gap * std::log(f.rho) + 1e-12);
    }
}

TEST_CASE("decay samples from the constant diagonal certificate", "[dichotomy]") {
    const DichotomyAnalyzer an(MatrixSequence::constant(diag({2, 0.5})));
    const auto f1 = fit_decay_constants(an.stable_samples(1, 1.0));
    CHECK(f1.rho >= 0.49);
    CHECK(f1.rho <= 0.51);
    const auto f2 = fit_decay_constants(an.unstable_samples(1, 1.0));
    CHECK(f2.rho >= 0.49);
    CHECK(f2.rho <= 0.51);
}

TEST_CASE("dichotomy verdict examples", "[dichotomy]") {
    const auto seq = MatrixSequence::constant(diag({2, 0.5}));
    const auto v = test_dichotomy(seq, 1.0);
    REQUIRE(v.is_certificate());
    CHECK(v.rank == 1);
    CHECK_THAT(v.rho, WithinAbs(0.5, 0.01));
    CHECK_THAT(v.K, WithinAbs(1.0, 0.01));
    Matrix e2(2, 1);
    e2 << 0, 1;
    CHECK(max_principal_angle(v.stable_basis, e2) < 1e-10);
    CHECK(v.margin > 0);

    const auto at2 = test_dichotomy(seq, 2.0);
    CHECK_FALSE(at2.is_certificate());
    CHECK(at2.margin <= 0);

    const auto pw = test_dichotomy(MatrixSequence::scalar(ScalarSequence::piecewise({0.5}, {2.0})), 1.0);
    CHECK_FALSE(pw.is_certificate());

    CHECK_THROWS_AS(test_dichotomy(seq, 0.0), ParameterError);
    CHECK_THROWS_AS(test_dichotomy(seq, 1.0, {8}), ParameterError);
}

TEST_CASE("rank 0 and rank d certificates outside the spectrum", "[dichotomy]") {
    const DichotomyAnalyzer an(MatrixSequence::constant(diag({2, 0.5})));
    const auto lo = an.test(0.25);
    REQUIRE(lo.is_certificate());
    CHECK(lo.rank == 0);
    const auto hi = an.test(4.0);
    REQUIRE(hi.is_certificate());
    CHECK(hi.rank == 2);
}

TEST_CASE("spectrum of constant diag(2, 1/2)", "[dichotomy]") {
    const auto est = estimate_spectrum(MatrixSequence::constant(diag({2, 0.5})));
    REQUIRE(est.intervals.size() == 2);
    CHECK(est.gap_ranks == std::vector<int>{0, 1, 2});
    CHECK(est.intervals[0].a <= 0.5);
    CHECK(est.intervals[0].b >= 0.5);
    CHECK(est.intervals[1].a <= 2.0);
    CHECK(est.intervals[1].b >= 2.0);
    for (const auto& i : est.intervals) CHECK(i.b - i.a <= 2 * est.refine_tol);
    CHECK_FALSE(est.low_confidence());
}

TEST_CASE("spectrum of the piecewise scalar system is the whole interval", "[dichotomy]") {
    const auto est = estimate_spectrum(MatrixSequence::scalar(ScalarSequence::piecewise({0.5}, {2.0})));
    REQUIRE(est.intervals.size() == 1);
    CHECK(std::abs(est.intervals[0].a - 0.5) <= 5e-3);
    CHECK(std::abs(est.intervals[0].b - 2.0) <= 5e-3);
    CHECK(est.gap_ranks == std::vector<int>{0, 1});
}

TEST_CASE("spectra of the periodic scalar and rotation systems", "[dichotomy]") {
    const auto p = estimate_spectrum(MatrixSequence::scalar(ScalarSequence::periodic({2, 0.5})));
    REQUIRE(p.intervals.size() == 1);
    CHECK(std::abs(p.intervals[0].a - 1.0) <= 5e-3);
    CHECK(std::abs(p.intervals[0].b - 1.0) <= 5e-3);

    Matrix r(2, 2);
    r << 0, -1, 1, 0;
    const auto rot = estimate_spectrum(MatrixSequence::constant(r));
    REQUIRE(rot.intervals.size() == 1);
    CHECK(rot.gap_ranks == std::vector<int>{0, 2});
    CHECK(inside(rot.intervals, 1.0, 0.0));
    CHECK(rot.intervals[0].b - rot.intervals[0].a <= 2 * rot.refine_tol);
}

TEST_CASE("Floquet oracle examples", "[dichotomy]") {
    const auto c = periodic_spectrum_oracle(MatrixSequence::constant(diag({2, 0.5})), 1);
    REQUIRE(c.size() == 2);
    CHECK_THAT(c[0], WithinAbs(0.5, 1e-15));
    CHECK_THAT(c[1], WithinAbs(2.0, 1e-15));
    const auto p = periodic_spectrum_oracle(MatrixSequence::scalar(ScalarSequence::periodic({2, 0.5})), 2);
    REQUIRE(p.size() == 1);
    CHECK_THAT(p[0], WithinAbs(1.0, 1e-15));
    CHECK_THROWS_AS(periodic_spectrum_oracle(MatrixSequence::scalar(ScalarSequence::periodic({2, 0.5})), 3),
                    ParameterError);
}

TEST_CASE("seeded period-3 instance: frozen Floquet points and spectrum", "[dichotomy]") {
    const auto seq = seeded_periodic_2x2();
    Matrix a0(2, 2);
    a0 << 0.58073414348916441, -0.086129758265906867, -0.045883087364861609, 1.5221350641976925;
    CHECK((seq.at(0) - a0).norm() < 1e-15);

    const auto mono = oracle::naive_transition(seq, 3, 0);
    const auto closed = oracle::floquet_points_2x2(mono, 3);
    CHECK_THAT(closed[0], WithinAbs(0.55874196179646618, 1e-13));
    CHECK_THAT(closed[1], WithinAbs(1.6940527138231514, 1e-13));
    const auto pts = periodic_spectrum_oracle(seq, 3);
    REQUIRE(pts.size() == 2);
    CHECK_THAT(pts[0], WithinAbs(closed[0], 1e-12));
    CHECK_THAT(pts[1], WithinAbs(closed[1], 1e-12));

    const auto est = estimate_spectrum(seq);
    REQUIRE(est.intervals.size() == 2);
    for (double x : pts) CHECK(inside(est.intervals, x, 5e-3));
    CHECK_THAT(est.intervals[0].a, WithinAbs(0.55820628, 1e-6));
    CHECK_THAT(est.intervals[1].b, WithinAbs(1.6946939, 1e-6));
}

TEST_CASE("scalar spectrum examples", "[dichotomy]") {
    const BohlParams p{256, 16, 0.2, false};
    const auto c = scalar_spectrum(ScalarSequence::constant(3), p);
    CHECK_THAT(c.a, WithinAbs(3.0, 1e-12));
    CHECK_THAT(c.b, WithinAbs(3.0, 1e-12));
    const auto per = scalar_spectrum(ScalarSequence::periodic({2, 0.5}), p);
    CHECK(std::abs(per.a - 1.0) <= 2.0 / 256);
    CHECK(std::abs(per.b - 1.0) <= 2.0 / 256);
    const auto pw = scalar_spectrum(ScalarSequence::piecewise({0.5}, {2.0}), p);
    CHECK_THAT(pw.a, WithinAbs(0.5, 1e-12));
    CHECK_THAT(pw.b, WithinAbs(2.0, 1e-12));
    CHECK_THROWS_AS(scalar_spectrum(ScalarSequence::periodic({2, 0.0}), p), ValidationError);
}

TEST_CASE("resolvent is open, ranks are monotone, bases do not depend on gamma", "[dichotomy][property]") {
    std::vector<MatrixSequence> systems = {
        seeded_periodic_2x2(),
        MatrixSequence::seeded_random({17, 3, {{0.3, 0.4}, {0.8, 1.0}, {1.8, 2.2}}, 0.0}),
        MatrixSequence::seeded_random({23, 2, {{0.3, 0.4}, {0.8, 1.0}, {1.8, 2.2}}, 0.05}),
    };
    for (const auto& seq : systems) {
        const DichotomyAnalyzer an(seq);
        const auto est = estimate_spectrum(an);
        int last_rank = -1;
        std::map<int, Matrix> basis_by_rank;
        for (const auto& g : est.grid) {
            if (g.outcome != Outcome::certificate) continue;
            CHECK(g.rank >= last_rank);
            last_rank = g.rank;
            const auto v = an.test(g.gamma);
            REQUIRE(v.is_certificate());
            if (!g.refinement) {
                // A small perturbation of gamma stays in the same gap.
                const auto w = an.test(g.gamma * (1 + 1e-6));
                CHECK(w.is_certificate());
                CHECK(w.rank == g.rank);
            }
            if (g.rank == 0 || g.rank == an.dimension()) continue;
            auto [it, fresh] = basis_by_rank.emplace(g.rank, v.stable_basis);
            if (!fresh) CHECK(max_principal_angle(it->second, v.stable_basis) < 1e-6);
        }
    }
}
