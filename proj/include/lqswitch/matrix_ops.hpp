#pragma once

#include <Eigen/Dense>

namespace lqswitch {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// (M + M')/2. Arithmetic on symmetric matrices drifts off the symmetric
/// subspace by round-off only; averaging with the transpose pulls it back.
inline Matrix symmetrized(const Matrix& m) {
    return 0.5 * (m + m.transpose());
}

/// Operator norm of a symmetric matrix (largest |eigenvalue|).
double spectral_norm(const Matrix& m);

/// Operator norm of a general matrix (largest singular value).
double operator_norm(const Matrix& m);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& m);

/// Largest entry-wise deviation from symmetry, |M - M'|_max.
double asymmetry(const Matrix& m);

bool is_finite(const Matrix& m);

} // namespace lqswitch
