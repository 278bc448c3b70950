#include "dspec/triangular.hpp"

#include <catch_amalgamated.hpp>

using namespace dspec;
using Catch::Matchers::WithinAbs;

namespace {

double max_residual(const MatrixSequence& seq, const KinematicPair& kp) {
    double worst = 0.0;
    for (std::int64_t n = kp.window.lo; n <= kp.window.hi; ++n) {
        const Matrix lhs = seq.at(n) * kp.f(n);
        const Matrix rhs = kp.f(n + 1) * kp.U.at(n);
        worst = std::max(worst, (lhs - rhs).norm() / std::max(1.0, lhs.norm()));
    }
    return worst;
}

double max_orthogonality(const KinematicPair& kp) {
    double worst = 0.0;
    for (const auto& f : kp.F) {
        const auto d = f.rows();
        worst = std::max(worst, (f.transpose() * f - Matrix::Identity(d, d)).norm());
    }
    return worst;
}

SpectralInterval iv(double a, double b) { return {a, b, false}; }

}  // namespace

TEST_CASE("upper-triangular input is returned unchanged", "[triangular]") {
    const auto seq = MatrixSequence::upper_triangular(
        {ScalarSequence::periodic({2, 1.5}), ScalarSequence::constant(0.5)}, {{0, 1, ScalarSequence::constant(1)}});
    const auto kp = qr_triangularize(seq, 20);
    for (std::int64_t n = -20; n <= 20; ++n) CHECK((kp.f(n) - Matrix::Identity(2, 2)).norm() < 1e-12);
    for (std::int64_t n = -20; n < 20; ++n) CHECK((kp.U.at(n) - seq.at(n)).norm() < 1e-12);
}

TEST_CASE("rotation triangularizes to the identity", "[triangular]") {
    Matrix r(2, 2);
    r << 0, -1, 1, 0;
    const auto kp = qr_triangularize(MatrixSequence::constant(r), 12);
    Matrix power = Matrix::Identity(2, 2);
    for (std::int64_t n = 0; n <= 12; ++n) {
        CHECK((kp.f(n) - power).norm() < 1e-12);
        if (n < 12) CHECK((kp.U.at(n) - Matrix::Identity(2, 2)).norm() < 1e-12);
        power = r * power;
    }
    CHECK((kp.f(-1) - r.transpose()).norm() < 1e-12);
    CHECK((kp.U.at(-5) - Matrix::Identity(2, 2)).norm() < 1e-12);
}

TEST_CASE("kinematic similarity identity and orthogonality", "[triangular]") {
    for (std::uint64_t s = 1; s <= 4; ++s) {
        const int d = 2 + static_cast<int>(s % 2);
        RandomSpec spec{s, static_cast<std::int64_t>(s % 3), {}, 0.1};
        for (int i = 0; i < d; ++i) spec.bands.push_back({0.5 * (i + 1), 0.5 * (i + 1) + 0.2});
        const auto seq = MatrixSequence::seeded_random(spec);
        const auto kp = qr_triangularize(seq, 128);
        CHECK(max_residual(seq, kp) < 1e-10);
        CHECK(max_orthogonality(kp) < 1e-12);
        for (std::int64_t n = -128; n < 128; ++n) {
            const Matrix u = kp.U.at(n);
            CHECK(u.triangularView<Eigen::StrictlyLower>().toDenseMatrix().norm() == 0.0);
            for (int i = 0; i < d; ++i) CHECK(u(i, i) > 0.0);
        }
    }
    CHECK_THROWS_AS(qr_triangularize(MatrixSequence::constant(Matrix::Identity(2, 2)), 0), ParameterError);
}

TEST_CASE("Bohl exponents are unchanged by the orthogonal change of variables", "[triangular][property]") {
    const auto seq = MatrixSequence::seeded_random({8, 0, {{0.5, 0.7}, {1.4, 1.8}}, 0.15});
    const auto kp = qr_triangularize(seq, 256);
    const BohlParams p{256, 16, 0.2, true};
    RandomStream rng(8, 0, 0x3);
    for (int t = 0; t < 5; ++t) {
        const Vector xi = random_unit_vector(2, rng);
        const auto a = bohl_exponents(seq, xi, p);
        const auto u = bohl_exponents(kp.U, kp.f(0).transpose() * xi, p);
        CHECK_THAT(u.upper, WithinAbs(a.upper, 1e-9));
        CHECK_THAT(u.lower, WithinAbs(a.lower, 1e-9));
    }
}

TEST_CASE("interval set distances", "[triangular]") {
    CHECK(hausdorff_distance({iv(0.5, 0.5), iv(2, 2)}, {iv(0.5, 0.5), iv(2, 2)}) == 0.0);
    CHECK_THAT(hausdorff_distance({iv(0.5, 2)}, {iv(0.5, 0.5), iv(2, 2)}), WithinAbs(0.75, 1e-15));
    CHECK_THAT(hausdorff_distance({iv(1, 1)}, {iv(1.25, 3)}), WithinAbs(2.0, 1e-15));
    CHECK_THAT(symmetric_difference_measure({iv(0, 2)}, {iv(1, 3)}), WithinAbs(2.0, 1e-15));
    const auto u = interval_union({iv(1, 2), iv(0, 1.5), iv(3, 4)});
    REQUIRE(u.size() == 2);
    CHECK(u[0].a == 0.0);
    CHECK(u[0].b == 2.0);
}

TEST_CASE("diagonal significance examples", "[triangular]") {
    SignificanceParams p;
    p.bohl = {256, 16, 0.2, true};
    const auto diag = MatrixSequence::diagonal({ScalarSequence::constant(2), ScalarSequence::constant(0.5)});
    const auto d = diagonal_significance(diag, p);
    CHECK(d.significant);
    REQUIRE(d.diagonal_union.size() == 2);
    CHECK_THAT(d.diagonal_union[0].a, WithinAbs(0.5, 1e-12));
    CHECK_THAT(d.diagonal_union[1].b, WithinAbs(2.0, 1e-12));

    const auto tri = MatrixSequence::upper_triangular({ScalarSequence::constant(2), ScalarSequence::constant(0.5)},
                                                      {{0, 1, ScalarSequence::constant(1)}});
    const auto t = diagonal_significance(tri, p);
    CHECK(t.significant);
    REQUIRE(t.sigma_u.intervals.size() == 2);
    CHECK(t.hausdorff <= 5e-3);

    // Coupling that switches across n = 0: both sides are computed, no verdict is asserted.
    const auto coupled = MatrixSequence::upper_triangular(
        {ScalarSequence::piecewise({0.5}, {2.0}), ScalarSequence::piecewise({2.0}, {0.5})},
        {{0, 1, ScalarSequence::piecewise({0.0}, {1.0})}});
    const auto c = diagonal_significance(coupled, p);
    CHECK(std::isfinite(c.hausdorff));
    CHECK_FALSE(c.sigma_u.intervals.empty());

    Matrix lower(2, 2);
    lower << 1, 0, 1, 1;
    CHECK_THROWS_AS(diagonal_significance(MatrixSequence::constant(lower), p), ParameterError);
}
