#pragma once

// Bounded invertible matrix sequences n -> A(n) on the integers.

#include "dspec/errors.hpp"
#include "dspec/linalg.hpp"
#include "dspec/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace dspec {

/// Closed integer interval [lo, hi].
struct IntRange {
    std::int64_t lo = 0;
    std::int64_t hi = 0;

    std::int64_t size() const { return hi - lo + 1; }
    bool contains(std::int64_t n) const { return lo <= n && n <= hi; }
    bool operator==(const IntRange&) const = default;
};

inline std::int64_t floor_mod(std::int64_t n, std::int64_t p) {
    const std::int64_t r = n % p;
    return r < 0 ? r + p : r;
}

// ---------------------------------------------------------------------------
// Scalar sequences

struct ScalarConstant {
    double value = 1.0;
    bool operator==(const ScalarConstant&) const = default;
};
struct ScalarPeriodic {
    std::vector<double> values;  // u(n) = values[n mod p]
    bool operator==(const ScalarPeriodic&) const = default;
};
struct ScalarPiecewise {
    std::vector<double> negative;     // periodic pattern used for n < 0
    std::vector<double> nonnegative;  // periodic pattern used for n >= 0
    bool operator==(const ScalarPiecewise&) const = default;
};
struct ScalarTabulated {
    std::int64_t first = 0;  // u(first + k) = values[k]
    std::vector<double> values;
    bool operator==(const ScalarTabulated&) const = default;
};
/// u(n) uniform in [lo, hi]; period 0 means aperiodic.
struct ScalarRandom {
    std::uint64_t seed = 0;
    double lo = 1.0;
    double hi = 1.0;
    std::int64_t period = 0;
    bool operator==(const ScalarRandom&) const = default;
};

class ScalarSequence {
public:
    using Rep = std::variant<ScalarConstant, ScalarPeriodic, ScalarPiecewise, ScalarTabulated, ScalarRandom>;

    ScalarSequence() : rep_(ScalarConstant{1.0}) {}
    explicit ScalarSequence(Rep rep) : rep_(std::move(rep)) { check_shape(); }

    static ScalarSequence constant(double v) { return ScalarSequence(ScalarConstant{v}); }
    static ScalarSequence periodic(std::vector<double> v) { return ScalarSequence(ScalarPeriodic{std::move(v)}); }
    static ScalarSequence piecewise(std::vector<double> neg, std::vector<double> nonneg) {
        return ScalarSequence(ScalarPiecewise{std::move(neg), std::move(nonneg)});
    }
    static ScalarSequence tabulated(std::int64_t first, std::vector<double> v) {
        return ScalarSequence(ScalarTabulated{first, std::move(v)});
    }
    static ScalarSequence random(std::uint64_t seed, double lo, double hi, std::int64_t period) {
        return ScalarSequence(ScalarRandom{seed, lo, hi, period});
    }

    const Rep& rep() const { return rep_; }

    double at(std::int64_t n) const {
        return std::visit(
            [n](const auto& k) -> double {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, ScalarConstant>) {
                    return k.value;
                } else if constexpr (std::is_same_v<K, ScalarPeriodic>) {
                    return k.values[floor_mod(n, std::ssize(k.values))];
                } else if constexpr (std::is_same_v<K, ScalarPiecewise>) {
                    const auto& side = n < 0 ? k.negative : k.nonnegative;
                    return side[floor_mod(n, std::ssize(side))];
                } else if constexpr (std::is_same_v<K, ScalarTabulated>) {
                    if (n < k.first || n >= k.first + std::ssize(k.values))
                        throw ValidationError("scalar sequence queried at n=" + std::to_string(n) +
                                              " outside its tabulated window");
                    return k.values[n - k.first];
                } else {
                    const std::int64_t idx = k.period > 0 ? floor_mod(n, k.period) : n;
                    RandomStream rng(k.seed, idx, 0x5ca1u);
                    return rng.uniform(k.lo, k.hi);
                }
            },
            rep_);
    }

    /// A finite index range on which the sequence takes every value it takes on Z.
    std::optional<IntRange> exact_range() const {
        return std::visit(
            [](const auto& k) -> std::optional<IntRange> {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, ScalarConstant>) {
                    return IntRange{0, 0};
                } else if constexpr (std::is_same_v<K, ScalarPeriodic>) {
                    return IntRange{0, std::ssize(k.values) - 1};
                } else if constexpr (std::is_same_v<K, ScalarPiecewise>) {
                    return IntRange{-std::ssize(k.negative), std::ssize(k.nonnegative) - 1};
                } else if constexpr (std::is_same_v<K, ScalarRandom>) {
                    if (k.period > 0) return IntRange{0, k.period - 1};
                    return std::nullopt;
                } else {
                    return std::nullopt;
                }
            },
            rep_);
    }

    /// Period of the pattern used on n < 0 (negative = true) or n >= 0.
    std::optional<std::int64_t> side_period(bool negative) const {
        if (std::holds_alternative<ScalarConstant>(rep_)) return 1;
        if (const auto* p = std::get_if<ScalarPeriodic>(&rep_)) return std::ssize(p->values);
        if (const auto* w = std::get_if<ScalarPiecewise>(&rep_))
            return negative ? std::ssize(w->negative) : std::ssize(w->nonnegative);
        if (const auto* r = std::get_if<ScalarRandom>(&rep_); r && r->period > 0) return r->period;
        return std::nullopt;
    }

    /// p with u(n + p) = u(n) for all n, when the kind guarantees one.
    std::optional<std::int64_t> period() const {
        if (std::holds_alternative<ScalarPiecewise>(rep_)) return std::nullopt;
        return side_period(false);
    }

    /// Tabulated sequences are only defined on their window.
    std::optional<IntRange> domain() const {
        if (const auto* t = std::get_if<ScalarTabulated>(&rep_))
            return IntRange{t->first, t->first + std::ssize(t->values) - 1};
        return std::nullopt;
    }

    bool operator==(const ScalarSequence&) const = default;

private:
    void check_shape() const {
        std::visit(
            [](const auto& k) {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, ScalarPeriodic>) {
                    if (k.values.empty()) throw ParameterError("periodic scalar sequence needs p >= 1 values");
                } else if constexpr (std::is_same_v<K, ScalarPiecewise>) {
                    if (k.negative.empty() || k.nonnegative.empty())
                        throw ParameterError("piecewise scalar sequence needs both sides");
                } else if constexpr (std::is_same_v<K, ScalarTabulated>) {
                    if (k.values.empty()) throw ParameterError("tabulated scalar sequence is empty");
                } else if constexpr (std::is_same_v<K, ScalarRandom>) {
                    if (!(k.lo <= k.hi)) throw ParameterError("random scalar band needs lo <= hi");
                    if (k.period < 0) throw ParameterError("random scalar period must be >= 0");
                }
            },
            rep_);
    }

    Rep rep_;
};

// ---------------------------------------------------------------------------
// Matrix sequences

struct ConstantKind {
    Matrix matrix;
};
struct PeriodicKind {
    std::vector<Matrix> matrices;  // A(n) = matrices[n mod p]
};
struct PiecewiseKind {
    std::vector<Matrix> negative;     // periodic pattern for n < 0
    std::vector<Matrix> nonnegative;  // periodic pattern for n >= 0
};
struct DiagonalKind {
    std::vector<ScalarSequence> entries;
};
struct OffDiagonalEntry {
    int row = 0;
    int col = 1;
    ScalarSequence entry;
};
struct UpperTriangularKind {
    std::vector<ScalarSequence> diagonal;
    std::vector<OffDiagonalEntry> upper;
};
/// A(n) = D(n) + epsilon N(n): D diagonal with D_ii uniform in bands[i],
/// N uniform in [-1, 1]^{d x d}.  period 0 means aperiodic.
struct RandomSpec {
    std::uint64_t seed = 0;
    std::int64_t period = 0;
    std::vector<std::pair<double, double>> bands;
    double epsilon = 0.0;
};
struct SeededRandomKind {
    RandomSpec spec;
};
struct TabulatedKind {
    std::int64_t first = 0;  // A(first + k) = matrices[k]
    std::vector<Matrix> matrices;
};

inline constexpr double kSingularThreshold = 1e-12;

/// Throws ValidationError if a is numerically singular (|det| after row
/// equilibration below threshold).
inline void check_invertible(const Matrix& a, std::int64_t n) {
    Matrix scaled = a;
    for (Eigen::Index i = 0; i < scaled.rows(); ++i) {
        const double m = scaled.row(i).cwiseAbs().maxCoeff();
        if (!(m > 0.0) || !std::isfinite(m))
            throw ValidationError("A(n) is singular at n=" + std::to_string(n));
        scaled.row(i) /= m;
    }
    const double det = std::abs(Eigen::PartialPivLU<Matrix>(scaled).determinant());
    if (!(det >= kSingularThreshold))
        throw ValidationError("A(n) is numerically singular at n=" + std::to_string(n));
}

class MatrixSequence {
public:
    using Rep = std::variant<ConstantKind, PeriodicKind, PiecewiseKind, DiagonalKind, UpperTriangularKind,
                             SeededRandomKind, TabulatedKind>;

    MatrixSequence(int dimension, Rep rep, std::optional<double> bound_cap = std::nullopt)
        : dim_(dimension), rep_(std::move(rep)), bound_cap_(bound_cap) {
        check_shape();
    }

    static MatrixSequence constant(Matrix a) {
        const int d = static_cast<int>(a.rows());
        return {d, ConstantKind{std::move(a)}};
    }
    static MatrixSequence periodic(std::vector<Matrix> mats) {
        const int d = mats.empty() ? 0 : static_cast<int>(mats.front().rows());
        return {d, PeriodicKind{std::move(mats)}};
    }
    static MatrixSequence piecewise(std::vector<Matrix> neg, std::vector<Matrix> nonneg) {
        const int d = nonneg.empty() ? 0 : static_cast<int>(nonneg.front().rows());
        return {d, PiecewiseKind{std::move(neg), std::move(nonneg)}};
    }
    static MatrixSequence diagonal(std::vector<ScalarSequence> entries) {
        const int d = static_cast<int>(entries.size());
        return {d, DiagonalKind{std::move(entries)}};
    }
    static MatrixSequence upper_triangular(std::vector<ScalarSequence> diag, std::vector<OffDiagonalEntry> upper) {
        const int d = static_cast<int>(diag.size());
        return {d, UpperTriangularKind{std::move(diag), std::move(upper)}};
    }
    static MatrixSequence seeded_random(RandomSpec spec) {
        const int d = static_cast<int>(spec.bands.size());
        return {d, SeededRandomKind{std::move(spec)}};
    }
    static MatrixSequence tabulated(std::int64_t first, std::vector<Matrix> mats) {
        const int d = mats.empty() ? 0 : static_cast<int>(mats.front().rows());
        return {d, TabulatedKind{first, std::move(mats)}};
    }
    /// Scalar (d = 1) system u.
    static MatrixSequence scalar(ScalarSequence u) { return diagonal({std::move(u)}); }

    int dimension() const { return dim_; }
    const Rep& rep() const { return rep_; }
    std::optional<double> bound_cap() const { return bound_cap_; }
    void set_bound_cap(std::optional<double> cap) { bound_cap_ = cap; }

    std::string kind_name() const {
        static constexpr const char* names[] = {"constant", "periodic", "piecewise", "diagonal",
                                                "upper_triangular", "seeded_random", "tabulated"};
        return names[rep_.index()];
    }

    /// A(n) without the invertibility check.
    Matrix raw_at(std::int64_t n) const {
        return std::visit([&](const auto& k) -> Matrix { return eval(k, n); }, rep_);
    }

    /// A(n); throws ValidationError if A(n) is singular.
    Matrix at(std::int64_t n) const {
        Matrix a = raw_at(n);
        check_invertible(a, n);
        return a;
    }

    /// A(n)^{-1}.
    Matrix inverse_at(std::int64_t n) const {
        const Matrix a = at(n);
        Eigen::PartialPivLU<Matrix> lu(a);
        return lu.inverse();
    }

    /// Period p with A(n + p) = A(n), when the kind guarantees one.
    std::optional<std::int64_t> period() const {
        if (std::holds_alternative<ConstantKind>(rep_)) return 1;
        if (const auto* p = std::get_if<PeriodicKind>(&rep_)) return std::ssize(p->matrices);
        if (const auto* r = std::get_if<SeededRandomKind>(&rep_)) {
            if (r->spec.period > 0) return r->spec.period;
        }
        return combined_period([](const ScalarSequence& u) { return u.period(); });
    }

    /// Finite range whose values exhaust {A(n) : n in Z}, when one exists.
    std::optional<IntRange> exact_range() const {
        if (auto p = period()) return IntRange{0, *p - 1};
        if (const auto* pw = std::get_if<PiecewiseKind>(&rep_))
            return IntRange{-std::ssize(pw->negative), std::ssize(pw->nonnegative) - 1};
        const auto neg = combined_period([](const ScalarSequence& u) { return u.side_period(true); });
        const auto pos = combined_period([](const ScalarSequence& u) { return u.side_period(false); });
        if (neg && pos) return IntRange{-*neg, *pos - 1};
        return std::nullopt;
    }

    /// Tabulated sequences are defined only on their window.
    std::optional<IntRange> domain() const {
        if (const auto* t = std::get_if<TabulatedKind>(&rep_))
            return IntRange{t->first, t->first + std::ssize(t->matrices) - 1};
        return std::nullopt;
    }

    bool is_diagonal() const {
        if (dim_ == 1) return true;
        if (std::holds_alternative<DiagonalKind>(rep_)) return true;
        if (const auto* r = std::get_if<SeededRandomKind>(&rep_)) return r->spec.epsilon == 0.0;
        if (const auto* u = std::get_if<UpperTriangularKind>(&rep_)) return u->upper.empty();
        // Explicit matrices: diagonal when every stored matrix is.
        const auto all_diagonal = [](const std::vector<Matrix>& ms) {
            return std::all_of(ms.begin(), ms.end(), [](const Matrix& m) { return m.isDiagonal(0.0); });
        };
        if (const auto* c = std::get_if<ConstantKind>(&rep_)) return c->matrix.isDiagonal(0.0);
        if (const auto* p = std::get_if<PeriodicKind>(&rep_)) return all_diagonal(p->matrices);
        if (const auto* w = std::get_if<PiecewiseKind>(&rep_))
            return all_diagonal(w->negative) && all_diagonal(w->nonnegative);
        if (const auto* t = std::get_if<TabulatedKind>(&rep_)) return all_diagonal(t->matrices);
        return false;
    }

    bool is_upper_triangular_kind() const {
        return is_diagonal() || std::holds_alternative<UpperTriangularKind>(rep_);
    }

private:
    /// lcm of f over the scalar entries of a diagonal or triangular kind.
    template <class F>
    std::optional<std::int64_t> combined_period(F&& f) const {
        std::vector<const ScalarSequence*> entries;
        if (const auto* d = std::get_if<DiagonalKind>(&rep_)) {
            for (const auto& e : d->entries) entries.push_back(&e);
        } else if (const auto* u = std::get_if<UpperTriangularKind>(&rep_)) {
            for (const auto& e : u->diagonal) entries.push_back(&e);
            for (const auto& e : u->upper) entries.push_back(&e.entry);
        } else {
            return std::nullopt;
        }
        std::int64_t p = 1;
        for (const auto* e : entries) {
            const auto q = f(*e);
            if (!q) return std::nullopt;
            p = std::lcm(p, *q);
        }
        return p;
    }

    Matrix eval(const ConstantKind& k, std::int64_t) const { return k.matrix; }
    Matrix eval(const PeriodicKind& k, std::int64_t n) const {
        return k.matrices[floor_mod(n, std::ssize(k.matrices))];
    }
    Matrix eval(const PiecewiseKind& k, std::int64_t n) const {
        const auto& side = n < 0 ? k.negative : k.nonnegative;
        return side[floor_mod(n, std::ssize(side))];
    }
    Matrix eval(const DiagonalKind& k, std::int64_t n) const {
        Matrix a = Matrix::Zero(dim_, dim_);
        for (int i = 0; i < dim_; ++i) a(i, i) = k.entries[i].at(n);
        return a;
    }
    Matrix eval(const UpperTriangularKind& k, std::int64_t n) const {
        Matrix a = Matrix::Zero(dim_, dim_);
        for (int i = 0; i < dim_; ++i) a(i, i) = k.diagonal[i].at(n);
        for (const auto& e : k.upper) a(e.row, e.col) += e.entry.at(n);
        return a;
    }
    Matrix eval(const SeededRandomKind& k, std::int64_t n) const {
        const auto& s = k.spec;
        const std::int64_t idx = s.period > 0 ? floor_mod(n, s.period) : n;
        RandomStream rng(s.seed, idx, 0xd1a6u);
        Matrix a(dim_, dim_);
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j) a(i, j) = s.epsilon * rng.uniform(-1.0, 1.0);
        for (int i = 0; i < dim_; ++i) a(i, i) += rng.uniform(s.bands[i].first, s.bands[i].second);
        return a;
    }
    Matrix eval(const TabulatedKind& k, std::int64_t n) const {
        if (n < k.first || n >= k.first + std::ssize(k.matrices))
            throw ValidationError("A(n) queried at n=" + std::to_string(n) + " outside the tabulated window [" +
                                  std::to_string(k.first) + ", " +
                                  std::to_string(k.first + std::ssize(k.matrices) - 1) + "]");
        return k.matrices[n - k.first];
    }

    void check_square_list(const std::vector<Matrix>& mats, const char* what) const {
        if (mats.empty()) throw ParameterError(std::string(what) + ": needs at least one matrix");
        for (const auto& m : mats)
            if (m.rows() != dim_ || m.cols() != dim_)
                throw ParameterError(std::string(what) + ": every matrix must be " + std::to_string(dim_) + "x" +
                                     std::to_string(dim_));
    }

    void check_shape() const {
        if (dim_ < 1) throw ParameterError("dimension must be positive");
        std::visit(
            [this](const auto& k) {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, ConstantKind>) {
                    check_square_list({k.matrix}, "constant");
                } else if constexpr (std::is_same_v<K, PeriodicKind>) {
                    check_square_list(k.matrices, "periodic");
                } else if constexpr (std::is_same_v<K, PiecewiseKind>) {
                    check_square_list(k.negative, "piecewise negative side");
                    check_square_list(k.nonnegative, "piecewise nonnegative side");
                } else if constexpr (std::is_same_v<K, DiagonalKind>) {
                    if (std::ssize(k.entries) != dim_) throw ParameterError("diagonal: need d scalar sequences");
                } else if constexpr (std::is_same_v<K, UpperTriangularKind>) {
                    if (std::ssize(k.diagonal) != dim_)
                        throw ParameterError("upper_triangular: need d diagonal sequences");
                    for (const auto& e : k.upper)
                        if (e.row < 0 || e.col >= dim_ || e.row >= e.col)
                            throw ParameterError("upper_triangular: off-diagonal entry (" + std::to_string(e.row) +
                                                 ", " + std::to_string(e.col) + ") is not strictly upper");
                } else if constexpr (std::is_same_v<K, SeededRandomKind>) {
                    check_random(k.spec);
                } else {
                    check_square_list(k.matrices, "tabulated");
                }
            },
            rep_);
    }

    void check_random(const RandomSpec& s) const {
        if (std::ssize(s.bands) != dim_) throw ParameterError("seeded_random: need one band per dimension");
        if (s.period < 0) throw ParameterError("seeded_random: period must be >= 0");
        if (!(s.epsilon >= 0.0)) throw ParameterError("seeded_random: epsilon must be >= 0");
        double min_lo = std::numeric_limits<double>::infinity();
        for (const auto& [lo, hi] : s.bands) {
            if (!(lo > 0.0 && lo <= hi)) throw ParameterError("seeded_random: bands need 0 < lo <= hi");
            min_lo = std::min(min_lo, lo);
        }
        if (s.epsilon > 0.0) {
            auto sorted = s.bands;
            std::sort(sorted.begin(), sorted.end());
            for (std::size_t i = 1; i < sorted.size(); ++i) {
                const double gap = sorted[i].first - sorted[i - 1].second;
                if (s.epsilon > 0.5 * gap)
                    throw ParameterError("seeded_random: epsilon exceeds half the smallest band gap");
            }
            if (s.epsilon * dim_ >= min_lo)
                throw ParameterError("seeded_random: epsilon * d must stay below the smallest band");
        }
    }

    int dim_;
    Rep rep_;
    std::optional<double> bound_cap_;
};

// ---------------------------------------------------------------------------
// Validation (assumptions A1/A2 on a range)

struct BoundReport {
    double m_hat = 0.0;           ///< max over the range of max(||A(n)||, ||A(n)^{-1}||)
    std::int64_t worst_n = 0;     ///< index attaining m_hat
    IntRange scanned{0, 0};       ///< indices actually evaluated
    bool exact_for_all_n = false; ///< scanned range exhausts all values of A on Z
    std::vector<std::string> warnings;
};

inline BoundReport validate(const MatrixSequence& seq, IntRange range) {
    if (range.hi < range.lo) throw ParameterError("validate: empty range");
    BoundReport report;
    report.scanned = range;
    if (auto exact = seq.exact_range()) {
        report.scanned = *exact;
        report.exact_for_all_n = true;
    }
    report.m_hat = 0.0;
    for (std::int64_t n = report.scanned.lo; n <= report.scanned.hi; ++n) {
        const Matrix a = seq.at(n);
        const double na = spectral_norm(a);
        const double ninv = spectral_norm(Matrix(Eigen::PartialPivLU<Matrix>(a).inverse()));
        const double m = std::max(na, ninv);
        if (m > report.m_hat) {
            report.m_hat = m;
            report.worst_n = n;
        }
    }
    if (auto cap = seq.bound_cap(); cap && report.m_hat > *cap)
        report.warnings.push_back("M_hat = " + std::to_string(report.m_hat) + " exceeds bound_cap = " +
                                  std::to_string(*cap));
    return report;
}

/// A(n) and A(n)^{-1} precomputed on [range.lo, range.hi].
class WindowCache {
public:
    WindowCache(const MatrixSequence& seq, IntRange range) : range_(range) {
        if (range.hi < range.lo) throw ParameterError("WindowCache: empty range");
        a_.reserve(static_cast<std::size_t>(range.size()));
        inv_.reserve(static_cast<std::size_t>(range.size()));
        // Periodic kinds: evaluate one period and reuse.
        const auto p = seq.period();
        for (std::int64_t n = range.lo; n <= range.hi; ++n) {
            if (p && n - range.lo >= *p) {
                a_.push_back(a_[static_cast<std::size_t>(n - range.lo - *p)]);
                inv_.push_back(inv_[static_cast<std::size_t>(n - range.lo - *p)]);
                continue;
            }
            Matrix a = seq.at(n);
            inv_.push_back(Eigen::PartialPivLU<Matrix>(a).inverse());
            a_.push_back(std::move(a));
        }
    }

    IntRange range() const { return range_; }
    const Matrix& a(std::int64_t n) const { return a_[index(n)]; }
    const Matrix& inv(std::int64_t n) const { return inv_[index(n)]; }

private:
    std::size_t index(std::int64_t n) const {
        if (!range_.contains(n))
            throw ValidationError("WindowCache: n=" + std::to_string(n) + " outside cached window");
        return static_cast<std::size_t>(n - range_.lo);
    }

    IntRange range_;
    std::vector<Matrix> a_;
    std::vector<Matrix> inv_;
};

/// The i-th diagonal entry of seq, tabulated on range.
inline ScalarSequence diagonal_sequence(const MatrixSequence& seq, int i, IntRange range) {
    if (i < 0 || i >= seq.dimension()) throw ParameterError("diagonal_sequence: index out of range");
    if (const auto* d = std::get_if<DiagonalKind>(&seq.rep())) return d->entries[static_cast<std::size_t>(i)];
    if (const auto* u = std::get_if<UpperTriangularKind>(&seq.rep())) return u->diagonal[static_cast<std::size_t>(i)];
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(range.size()));
    for (std::int64_t n = range.lo; n <= range.hi; ++n) values.push_back(seq.raw_at(n)(i, i));
    return ScalarSequence::tabulated(range.lo, std::move(values));
}

}  // namespace dspec
