#include "dspec/bohl.hpp"
#include "support/oracles.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>

using namespace dspec;
using Catch::Matchers::WithinAbs;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double e : v) x(i++) = e;
    return x;
}

Matrix diag(std::initializer_list<double> v) { return vec(v).asDiagonal(); }

}  // namespace

TEST_CASE("tail start matches the gap-count rule", "[bohl]") {
    CHECK(oracle::tail_start(256, 16, 0.2) == 208);
    CHECK(detail::tail_start_gap({256, 16, 0.2, false}) == 208);
    CHECK(detail::tail_start_gap({2048, 16, 0.2, false}) == oracle::tail_start(2048, 16, 0.2));
}

TEST_CASE("constant diagonal system: exponents along the axes", "[bohl]") {
    const auto seq = MatrixSequence::constant(diag({2, 0.5}));
    const BohlParams p{256, 16, 0.2, false};
    const auto e0 = bohl_exponents(seq, vec({1, 0}), p);
    CHECK_THAT(e0.upper, WithinAbs(2.0, 1e-12));
    CHECK_THAT(e0.lower, WithinAbs(2.0, 1e-12));
    const auto e1 = bohl_exponents(seq, vec({0, 1}), p);
    CHECK_THAT(e1.upper, WithinAbs(0.5, 1e-12));
    CHECK_THAT(e1.lower, WithinAbs(0.5, 1e-12));
    // A generic vector is dominated by the faster direction on the tail.
    const auto e2 = bohl_exponents(seq, vec({1, 1}), p);
    CHECK(e2.lower <= e2.upper);
    CHECK(std::abs(e2.upper - 2.0) < 0.05);
}

TEST_CASE("bad Bohl parameters are rejected", "[bohl]") {
    const auto seq = MatrixSequence::constant(diag({2}));
    CHECK_THROWS_AS(bohl_exponents(seq, vec({1}), {20, 16, 0.2, false}), ParameterError);
    CHECK_THROWS_AS(bohl_exponents(seq, vec({1}), {256, 0, 0.2, false}), ParameterError);
    CHECK_THROWS_AS(bohl_exponents(seq, vec({1}), {256, 16, 1.0, false}), ParameterError);
    CHECK_THROWS_AS(bohl_exponents(seq, vec({0}), {256, 16, 0.2, false}), ParameterError);
}

TEST_CASE("scalar Bohl exponents agree with per-window enumeration", "[bohl]") {
    const std::int64_t N = 96, L = 8;
    const std::vector<ScalarSequence> cases = {
        ScalarSequence::periodic({2, 0.5, 1.5}),
        ScalarSequence::piecewise({0.5}, {2.0}),
        ScalarSequence::random(21, 0.4, 3.0, 0),
        ScalarSequence::random(22, -2.0, -0.3, 5),
    };
    for (bool two : {false, true}) {
        const BohlParams p{N, L, 0.25, two};
        const auto g0 = oracle::tail_start(N, L, 0.25);
        for (const auto& u : cases) {
            const auto est = scalar_bohl(u, p);
            const auto ref = oracle::window_rates([&](std::int64_t k) { return u.at(k); }, N, g0, two ? -N : 0);
            CHECK_THAT(est.upper, WithinAbs(ref.upper, 1e-12 * ref.upper));
            CHECK_THAT(est.lower, WithinAbs(ref.lower, 1e-12 * ref.lower));
            // The d = 1 matrix route gives the same numbers.
            const auto m = bohl_exponents(MatrixSequence::scalar(u), vec({1}), p);
            CHECK_THAT(m.upper, WithinAbs(est.upper, 1e-12 * est.upper));
            CHECK_THAT(m.lower, WithinAbs(est.lower, 1e-12 * est.lower));
        }
    }
}

TEST_CASE("piecewise scalar: one-sided window sees only the forward half", "[bohl]") {
    const auto u = ScalarSequence::piecewise({0.5}, {2.0});
    const std::int64_t N = 256;
    const auto one = scalar_bohl(u, {N, 16, 0.2, false});
    CHECK(std::abs(one.upper - 2.0) <= 2.0 / N);
    CHECK(std::abs(one.lower - 2.0) <= 2.0 / N);
    const auto two = scalar_bohl(u, {N, 16, 0.2, true});
    CHECK_THAT(two.upper, WithinAbs(2.0, 1e-12));
    CHECK_THAT(two.lower, WithinAbs(0.5, 1e-12));
}

TEST_CASE("periodic scalar: frozen two-sided window values", "[bohl]") {
    const auto est = scalar_bohl(ScalarSequence::periodic({2, 0.5}), {256, 16, 0.2, true});
    CHECK_THAT(est.upper, WithinAbs(1.0033219993368792, 1e-13));
    CHECK_THAT(est.lower, WithinAbs(0.99668899980357772, 1e-13));
    CHECK(std::abs(est.upper - 1.0) <= 2.0 / 256);
    CHECK(std::abs(est.lower - 1.0) <= 2.0 / 256);
    CHECK(std::abs(oracle::geometric_mean({2, 0.5}) - 1.0) < 1e-15);
}

TEST_CASE("Bohl exponents: ordering, scale invariance, cache route", "[bohl][property]") {
    for (std::uint64_t s = 1; s <= 6; ++s) {
        const int d = 1 + static_cast<int>(s % 3);
        RandomSpec spec{s, 0, {}, 0.04};
        for (int i = 0; i < d; ++i) spec.bands.push_back({0.4 * (i + 1), 0.4 * (i + 1) + 0.1});
        const auto seq = MatrixSequence::seeded_random(spec);
        RandomStream rng(s, 1, 0xb0);
        const Vector xi = random_unit_vector(d, rng);
        const BohlParams p{128, 16, 0.2, s % 2 == 0};
        const auto e = bohl_exponents(seq, xi, p);
        CHECK(e.lower <= e.upper);
        const auto scaled = bohl_exponents(seq, 37.5 * xi, p);
        CHECK_THAT(scaled.upper, WithinAbs(e.upper, 1e-12 * e.upper));
        CHECK_THAT(scaled.lower, WithinAbs(e.lower, 1e-12 * e.lower));
        const WindowCache cache(seq, {p.two_sided ? -p.window : 0, p.window - 1});
        const auto c = bohl_exponents(cache, xi, p);
        CHECK(c.upper == e.upper);
        CHECK(c.lower == e.lower);
    }
}

TEST_CASE("diagonal systems have at most 2^d - 1 distinct upper exponents", "[bohl][property]") {
    const BohlParams p{128, 16, 0.2, false};
    for (const auto& m : {diag({2, 0.5}), diag({0.3, 1.1, 2.5})}) {
        const int d = static_cast<int>(m.rows());
        const auto seq = MatrixSequence::constant(m);
        const WindowCache cache(seq, {0, p.window - 1});
        RandomStream rng(static_cast<std::uint64_t>(d), 0, 0xc0);
        std::vector<double> uppers;
        for (int t = 0; t < 200; ++t) {
            Vector xi = random_unit_vector(d, rng);
            // Zero some coordinates so that every coordinate subset is hit.
            for (int i = 0; i < d; ++i)
                if (t % (1 << d) & (1 << i)) xi(i) = 0.0;
            if (xi.norm() == 0.0) continue;
            uppers.push_back(bohl_exponents(cache, xi, p).upper);
        }
        std::sort(uppers.begin(), uppers.end());
        std::size_t distinct = 1;
        for (std::size_t k = 1; k < uppers.size(); ++k)
            if (uppers[k] - uppers[k - 1] > 1e-9) ++distinct;
        CHECK(distinct <= (std::size_t{1} << d) - 1);
    }
}

TEST_CASE("general exponents bracket every solution", "[bohl]") {
    const auto seq = MatrixSequence::constant(diag({2, 0.5}));
    const BohlParams p{128, 16, 0.2, false};
    const auto g = general_exponents(seq, p);
    CHECK_THAT(g.senior, WithinAbs(2.0, 1e-12));
    CHECK_THAT(g.junior, WithinAbs(0.5, 1e-12));
    const auto e = bohl_exponents(seq, vec({0.3, -0.8}), p);
    CHECK(e.upper <= g.senior + 1e-12);
    CHECK(e.lower >= g.junior - 1e-12);
}
