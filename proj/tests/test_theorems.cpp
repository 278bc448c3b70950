#include "dspec/theorems.hpp"

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

struct Pipeline {
    SpectrumEstimate est;
    std::vector<SpectralBundleFiber> fibers;
};

Pipeline run(const MatrixSequence& seq) {
    const DichotomyAnalyzer an(seq);
    Pipeline p;
    p.est = estimate_spectrum(an);
    p.fibers = bundle_fibers(p.est, gap_certificates(an, p.est));
    return p;
}

const VerifyParams kFast{{256, 16, 0.2, false}, std::nullopt, 3, false, 1};

}  // namespace

TEST_CASE("theorem 1 on the constant diagonal system", "[theorems]") {
    const auto seq = MatrixSequence::constant(diag({2, 0.5}));
    const auto p = run(seq);
    const auto rep = verify_theorem1(seq, p.est, p.fibers, 4, kFast, "diag");
    REQUIRE(rep.rows.size() == 8);
    CHECK(rep.pass());
    CHECK(rep.pass_rate() == 1.0);
    for (const auto& row : rep.rows) {
        const double target = row.fiber == 1 ? 0.5 : 2.0;
        CHECK_THAT(row.upper, WithinAbs(target, 1e-9));
        CHECK_THAT(row.lower, WithinAbs(target, 1e-9));
        CHECK(row.tol == 5 * p.est.refine_tol);
    }
}

TEST_CASE("theorem 2 on the constant diagonal and piecewise systems", "[theorems]") {
    const auto seq = MatrixSequence::constant(diag({2, 0.5}));
    const auto p = run(seq);
    const auto rep = verify_theorem2(seq, p.est, 10, kFast);
    CHECK(rep.pass());
    for (const auto& row : rep.rows) {
        CHECK(row.a <= 0.5);
        CHECK(row.b >= 2.0);
    }

    const auto pw = MatrixSequence::scalar(ScalarSequence::piecewise({0.5}, {2.0}));
    const auto est = estimate_spectrum(pw);
    const auto r2 = verify_theorem2(pw, est, 3, kFast);
    CHECK(r2.pass());
}

TEST_CASE("theorem 1 and 2 on a banded d=3 diagonal system", "[theorems]") {
    const auto seq = MatrixSequence::seeded_random({17, 3, {{0.3, 0.4}, {0.8, 1.0}, {1.8, 2.2}}, 0.0});
    const auto p = run(seq);
    VerifyParams vp = kFast;
    vp.bohl.window = 1024;
    const auto t1 = verify_theorem1(seq, p.est, p.fibers, 20, vp);
    CHECK(t1.rows.size() == 60);
    CHECK(t1.pass());
    const auto t2 = verify_theorem2(seq, p.est, 50, vp);
    CHECK(t2.pass());
}

TEST_CASE("theorem 2 on a seeded periodic 2x2 system", "[theorems]") {
    const auto seq = MatrixSequence::seeded_random({42, 3, {{0.4, 0.6}, {1.5, 2.0}}, 0.15});
    const auto p = run(seq);
    VerifyParams vp = kFast;
    vp.bohl.window = 1024;
    CHECK(verify_theorem2(seq, p.est, 50, vp).pass());
    CHECK(verify_theorem1(seq, p.est, p.fibers, 10, vp).pass());
}

TEST_CASE("fiber samples decompose consistently on diagonal systems", "[theorems][property]") {
    // A vector mixing fibers i < j has exponents inside [a_i, b_j].
    const auto seq = MatrixSequence::seeded_random({17, 3, {{0.3, 0.4}, {0.8, 1.0}, {1.8, 2.2}}, 0.0});
    const auto p = run(seq);
    VerifyParams vp = kFast;
    vp.bohl.window = 1024;
    const WindowCache cache(seq, {0, 1023});
    RandomStream rng(5, 0, 0x11);
    for (int t = 0; t < 10; ++t) {
        const int i = static_cast<int>(rng.uniform(0, 2.999));
        Vector xi = Vector::Zero(3);
        for (int k = 0; k <= i; ++k) xi += rng.normal() * p.fibers[static_cast<std::size_t>(k)].basis.col(0);
        const auto b = bohl_exponents(cache, xi, vp.bohl);
        CHECK(b.upper <= p.est.intervals[static_cast<std::size_t>(i)].b + 5 * p.est.refine_tol);
        CHECK(b.lower >= p.est.intervals.front().a - 5 * p.est.refine_tol);
    }
}

TEST_CASE("containment reports are deterministic", "[theorems][property]") {
    const auto seq = MatrixSequence::seeded_random({42, 3, {{0.4, 0.6}, {1.5, 2.0}}, 0.15});
    const auto p = run(seq);
    const auto a = verify_theorem1(seq, p.est, p.fibers, 3, kFast);
    const auto b = verify_theorem1(seq, p.est, p.fibers, 3, kFast);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
        CHECK(a.rows[k].xi == b.rows[k].xi);
        CHECK(a.rows[k].upper == b.rows[k].upper);
        CHECK(a.rows[k].lower == b.rows[k].lower);
    }
    VerifyParams other = kFast;
    other.seed = 4;
    CHECK(verify_theorem1(seq, p.est, p.fibers, 3, other).rows[0].xi != a.rows[0].xi);
}

TEST_CASE("fixed tolerance and designed failure", "[theorems]") {
    const auto seq = MatrixSequence::constant(diag({2, 0.5}));
    const auto p = run(seq);
    // Swap the interval labels so fiber samples are checked against the wrong interval.
    auto wrong = p.fibers;
    std::swap(wrong[0].interval, wrong[1].interval);
    VerifyParams vp = kFast;
    vp.tol = 1e-3;
    const auto rep = verify_theorem1(seq, p.est, wrong, 2, vp);
    CHECK_FALSE(rep.pass());
    CHECK(rep.failures() == 4);
    for (const auto& row : rep.rows) CHECK(row.tol == 1e-3);
    vp.escalate = true;
    const auto esc = verify_theorem1(seq, p.est, wrong, 2, vp);
    CHECK(esc.rows[0].escalated);
    CHECK_FALSE(esc.rows[0].escalated_pass);
    CHECK_THROWS_AS(verify_theorem1(seq, p.est, p.fibers, 0, vp), ParameterError);
}

TEST_CASE("endpoint attainability on diagonal systems", "[theorems]") {
    const BohlParams bp{1024, 16, 0.2, true};
    const auto c = MatrixSequence::constant(diag({2, 0.5}));
    const auto rc = verify_endpoint_attainability(c, estimate_spectrum(c), 5e-3, bp);
    CHECK(rc.status == "diagonal");
    CHECK(rc.pass());
    REQUIRE(rc.witnesses.size() == 4);
    CHECK(rc.witnesses[0].coordinate == 1);
    CHECK(rc.witnesses[3].coordinate == 0);

    const auto mixed = MatrixSequence::diagonal({ScalarSequence::piecewise({0.5}, {2.0}), ScalarSequence::constant(3)});
    const auto est = estimate_spectrum(mixed);
    REQUIRE(est.intervals.size() == 2);
    const auto rm = verify_endpoint_attainability(mixed, est, 5e-3, bp);
    CHECK(rm.pass());
    CHECK(rm.witnesses[0].coordinate == 0);
    CHECK(rm.witnesses[1].coordinate == 0);
    CHECK(rm.witnesses[2].coordinate == 1);
    CHECK(rm.witnesses[3].coordinate == 1);
}

TEST_CASE("endpoint attainability refuses non-significant or unsupported input", "[theorems]") {
    Matrix r(2, 2);
    r << 0, -1, 1, 0;
    const auto rot = MatrixSequence::constant(r);
    const auto rep = verify_endpoint_attainability(rot, estimate_spectrum(rot), 5e-3);
    CHECK(rep.status == "refused");
    CHECK_FALSE(rep.pass());

    SignificanceReport fake;
    fake.significant = false;
    const auto tri = MatrixSequence::upper_triangular({ScalarSequence::constant(2), ScalarSequence::constant(0.5)},
                                                      {{0, 1, ScalarSequence::constant(1)}});
    CHECK(verify_endpoint_attainability(tri, estimate_spectrum(tri), 5e-3, {}, &fake).status == "refused");

    SignificanceParams sp;
    sp.bohl = {1024, 16, 0.2, true};
    const auto sig = diagonal_significance(tri, sp);
    const auto ok = verify_endpoint_attainability(tri, sig.sigma_u, 5e-3, sp.bohl, &sig);
    CHECK(ok.status == "triangular");
    CHECK(ok.pass());
}
