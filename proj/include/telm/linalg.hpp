// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include "telm/common.hpp"
#include "telm/tensor.hpp"

namespace telm {

/// Thin singular value decomposition A = U * diag(S) * V^T with
/// non-increasing S >= 0 and column-orthonormal U, V. Column signs are
/// fixed (largest-magnitude entry of each U column made positive, V column
/// flipped to match) so decompositions are reproducible in file output.
struct SvdResult {
    Matrix u;
    Vector s;
    Matrix v;

    Eigen::Index rank_count(double tol) const;
};

/// Default relative truncation tolerance: max(m, n) * machine epsilon.
double default_rank_tol(Eigen::Index rows, Eigen::Index cols);

/// Thin SVD. Throws std::invalid_argument on non-finite input and
/// numerical_error if the decomposition does not converge.
SvdResult thin_svd(const Matrix& a);

/// Number of singular values above tol * sigma_max (0 for the zero matrix).
int numeric_rank(const Matrix& a, double tol);
int numeric_rank(const Matrix& a);

/// Moore-Penrose pseudoinverse with singular values below tol * sigma_max
/// treated as zero.
Matrix pinv(const Matrix& a, double tol);
Matrix pinv(const Matrix& a);

/// Minimal-norm least-squares solution x = A^+ b.
Vector lstsq(const Matrix& a, const Vector& b);
Matrix lstsq(const Matrix& a, const Matrix& b);

/// Minimal-norm least-squares solve reusing an existing decomposition of A.
Matrix svd_solve(const SvdResult& svd, const Matrix& rhs, double tol);

} // namespace telm
