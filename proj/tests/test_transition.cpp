#include "dspec/transition.hpp"
#include "support/oracles.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <array>

using namespace dspec;

namespace {

double rel_err(const ScaledMatrix& x, const oracle::LMatrix& ref) {
    const oracle::LMatrix diff = x.value().cast<long double>() - ref;
    return static_cast<double>(diff.norm() / ref.norm());
}

MatrixSequence seeded(std::uint64_t seed, int d) {
    RandomSpec spec{seed, 0, {}, 0.05};
    for (int i = 0; i < d; ++i) spec.bands.push_back({0.5 + i, 0.7 + i});
    return MatrixSequence::seeded_random(spec);
}

}  // namespace

TEST_CASE("transition examples", "[transition]") {
    Matrix d(2, 2);
    d << 2, 0, 0, 0.5;
    const auto c = MatrixSequence::constant(d);
    Matrix x30(2, 2);
    x30 << 8, 0, 0, 0.125;
    CHECK(transition(c, 3, 0).value().isApprox(x30, 1e-14));
    Matrix x03(2, 2);
    x03 << 0.125, 0, 0, 8;
    CHECK(transition(c, 0, 3).value().isApprox(x03, 1e-14));
    CHECK(transition(c, 5, 5).value() == Matrix::Identity(2, 2));

    const auto p = MatrixSequence::scalar(ScalarSequence::periodic({2, 0.5}));
    CHECK(std::abs(transition(p, 2, 0).value()(0, 0) - 1.0) < 1e-15);
    CHECK(std::abs(transition(p, 1, 0).value()(0, 0) - 2.0) < 1e-15);
}

TEST_CASE("transition agrees with long-double products", "[transition]") {
    for (std::uint64_t s = 1; s <= 4; ++s) {
        const auto seq = seeded(s, 1 + static_cast<int>(s % 3));
        for (auto [m, n] : {std::pair<std::int64_t, std::int64_t>{40, -5}, {-30, 12}, {7, 7}, {-3, -60}}) {
            CHECK(rel_err(transition(seq, m, n), oracle::naive_transition(seq, m, n)) < 1e-12);
        }
        const WindowCache cache(seq, {-60, 60});
        CHECK(relative_difference(transition(cache, 50, -20), transition(seq, 50, -20)) == 0.0);
        CHECK(relative_difference(transition(cache, -20, 50), transition(seq, -20, 50)) == 0.0);
    }
}

TEST_CASE("window cap is enforced", "[transition]") {
    const auto seq = MatrixSequence::constant(Matrix::Identity(2, 2));
    CHECK_THROWS_AS(transition(seq, 11, 0, {10}), ParameterError);
    CHECK_NOTHROW(transition(seq, 10, 0, {10}));
}

TEST_CASE("scaling keeps large spans finite", "[transition]") {
    Matrix d(2, 2);
    d << 8, 0, 0, 0.125;
    const auto x = transition(MatrixSequence::constant(d), 5000, 0);
    CHECK(std::isfinite(x.log_scale));
    CHECK(std::abs(x.log_norm() - 5000 * std::log(8.0)) < 1e-9 * 5000 * std::log(8.0));
}

TEST_CASE("cocycle and inverse identities", "[transition][property]") {
    for (std::uint64_t s = 10; s < 16; ++s) {
        const auto seq = seeded(s, 2 + static_cast<int>(s % 2));
        RandomStream rng(s, 0, 0x77);
        for (int t = 0; t < 5; ++t) {
            std::array<std::int64_t, 3> idx;
            for (auto& i : idx) i = static_cast<std::int64_t>(rng.uniform(-80, 80));
            // With l between k and m the product is well conditioned.
            std::sort(idx.begin(), idx.end());
            if (t % 2) std::reverse(idx.begin(), idx.end());
            const auto [k, l, m] = idx;
            CHECK(relative_difference(transition(seq, k, l) * transition(seq, l, m), transition(seq, k, m)) < 1e-9);
        }
        // X(k, l) X(l, k) = I up to rounding at the scale of the factors.
        for (auto [k, l] : {std::pair<std::int64_t, std::int64_t>{30, -10}, {-25, 5}}) {
            const ScaledMatrix a = transition(seq, k, l), b = transition(seq, l, k);
            const ScaledMatrix id = a * b;
            const int d = seq.dimension();
            const double scale = std::exp(a.log_norm() + b.log_norm());
            CHECK((id.value() - Matrix::Identity(d, d)).norm() < 1e-12 * scale);
        }
    }
}

TEST_CASE("orbit log norms track ||X(n,0) xi||", "[transition]") {
    Matrix d(2, 2);
    d << 2, 0, 0, 0.5;
    Vector xi(2);
    xi << 3, 4;
    const auto orbit = orbit_lognorms(MatrixSequence::constant(d), xi, {-10, 10});
    for (std::int64_t n = -10; n <= 10; ++n) {
        const double a = 3 * std::pow(2.0, n), b = 4 * std::pow(0.5, n);
        CHECK(std::abs(orbit.lognorm(n) - std::log(std::hypot(a, b))) < 1e-12);
        CHECK(std::abs(orbit.direction(n).norm() - 1.0) < 1e-14);
    }
    CHECK_THROWS_AS(orbit_lognorms(MatrixSequence::constant(d), Vector::Zero(2), {0, 3}), ParameterError);
}

TEST_CASE("orbit log norms move by at most log M_hat per step", "[transition][property]") {
    for (std::uint64_t s = 20; s < 24; ++s) {
        const auto seq = seeded(s, 2 + static_cast<int>(s % 2));
        const IntRange range{-60, 60};
        const double log_m = std::log(validate(seq, range).m_hat);
        RandomStream rng(s, 0, 0x5);
        const auto orbit = orbit_lognorms(seq, random_unit_vector(seq.dimension(), rng), range);
        for (std::int64_t n = range.lo; n < range.hi; ++n)
            CHECK(std::abs(orbit.lognorm(n + 1) - orbit.lognorm(n)) <= log_m + 1e-12);
    }
}
