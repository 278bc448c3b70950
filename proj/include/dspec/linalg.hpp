#pragma once

// Small dense linear-algebra helpers on top of Eigen.  Dimensions in this
// library are small (d <= ~10), so everything is dynamic-size MatrixXd.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <utility>

namespace dspec {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kLn2 = 0.69314718055994530942;

/// Largest singular value.  Closed forms for rank-one shapes and 2-row/2-col
/// matrices, JacobiSVD otherwise.
inline double spectral_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    if (m.rows() == 1 || m.cols() == 1) return m.norm();
    if (m.rows() == 2 || m.cols() == 2) {
        // Gram matrix is 2x2 symmetric: largest eigenvalue in closed form.
        const Matrix g = (m.rows() == 2) ? Matrix(m * m.transpose()) : Matrix(m.transpose() * m);
        const double a = g(0, 0), b = g(0, 1), c = g(1, 1);
        const double half_tr = 0.5 * (a + c);
        const double disc = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
        return std::sqrt(std::max(0.0, half_tr + disc));
    }
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

inline double smallest_singular_value(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& s = svd.singularValues();
    if (m.rows() < m.cols()) return 0.0;
    return s(s.size() - 1);
}

/// Thin QR with positive diagonal on R: m (r x c, r >= c) = Q R, Q r x c
/// with orthonormal columns, R c x c upper triangular with R_ii >= 0.
inline std::pair<Matrix, Matrix> qr_positive(const Matrix& m) {
    const Eigen::Index rows = m.rows(), cols = m.cols();
    Eigen::HouseholderQR<Matrix> qr(m);
    Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
    Matrix r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < cols; ++i) {
        if (r(i, i) < 0.0) {
            q.col(i) *= -1.0;
            r.row(i) *= -1.0;
        }
    }
    return {std::move(q), std::move(r)};
}

/// Orthonormal basis of the column space; singular values below
/// rel_cutoff * sigma_max are treated as zero.
inline Matrix column_space(const Matrix& m, double rel_cutoff = 1e-8) {
    if (m.cols() == 0) return Matrix(m.rows(), 0);
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU);
    const auto& s = svd.singularValues();
    Eigen::Index rank = 0;
    const double top = s.size() > 0 ? s(0) : 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (top > 0.0 && s(i) > rel_cutoff * top) ++rank;
    return svd.matrixU().leftCols(rank);
}

/// Orthonormal basis of the null space of m (as a map R^cols -> R^rows).
inline Matrix null_space(const Matrix& m, double rel_cutoff = 1e-8) {
    const Eigen::Index n = m.cols();
    if (m.rows() == 0) return Matrix::Identity(n, n);
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double top = s.size() > 0 ? s(0) : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (top > 0.0 && s(i) > rel_cutoff * std::max(top, 1.0)) ++rank;
    return svd.matrixV().rightCols(n - rank);
}

/// Orthonormal complement of the span of orthonormal columns `basis`.
inline Matrix orthogonal_complement(const Matrix& basis, Eigen::Index dim) {
    if (basis.cols() == 0) return Matrix::Identity(dim, dim);
    return null_space(basis.transpose());
}

/// Sines of the principal angles between span(a) and span(b) (orthonormal
/// columns), for the smaller of the two dimensions.  Sine-based so that tiny
/// angles are resolved to full precision.
inline Vector principal_angle_sines(const Matrix& a, const Matrix& b) {
    const Matrix& small = a.cols() <= b.cols() ? a : b;
    const Matrix& large = a.cols() <= b.cols() ? b : a;
    if (small.cols() == 0) return Vector(0);
    const Matrix residual = small - large * (large.transpose() * small);
    Eigen::JacobiSVD<Matrix> svd(residual);
    Vector s = svd.singularValues();
    return s.cwiseMin(1.0);
}

/// Smallest principal angle (radians).  pi/2 when either subspace is trivial.
inline double min_principal_angle(const Matrix& a, const Matrix& b) {
    if (a.cols() == 0 || b.cols() == 0) return M_PI / 2;
    const Vector s = principal_angle_sines(a, b);
    return std::asin(s.minCoeff());
}

/// Largest principal angle; the subspace distance for equal dimensions.
inline double max_principal_angle(const Matrix& a, const Matrix& b) {
    if (a.cols() == 0 && b.cols() == 0) return 0.0;
    if (a.cols() != b.cols()) return M_PI / 2;
    const Vector s = principal_angle_sines(a, b);
    return std::asin(s.maxCoeff());
}

/// Oblique projector onto span(image) along span(kernel); the two bases
/// together must span R^d.
inline Matrix oblique_projector(const Matrix& image, const Matrix& kernel) {
    const Eigen::Index d = image.rows();
    if (image.cols() == 0) return Matrix::Zero(d, d);
    if (kernel.cols() == 0) return Matrix::Identity(d, d);
    Matrix joined(d, d);
    joined << image, kernel;
    const Matrix inv = joined.inverse();
    return image * inv.topRows(image.cols());
}

}  // namespace dspec
