// SPDX-License-Identifier: Apache-2.0
#include "telm/linalg.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace telm {

double default_rank_tol(Eigen::Index rows, Eigen::Index cols) {
    return static_cast<double>(std::max(rows, cols)) *
           std::numeric_limits<double>::epsilon();
}

Eigen::Index SvdResult::rank_count(double tol) const {
    if (s.size() == 0) return 0;
    const double cutoff = tol * s(0);
    Eigen::Index r = 0;
    while (r < s.size() && s(r) > cutoff) ++r;
    // zero matrix: sigma_max == 0, nothing above the cutoff
    if (s(0) == 0.0) return 0;
    return r;
}

SvdResult thin_svd(const Matrix& a) {
    if (!a.allFinite())
        throw std::invalid_argument("thin_svd: input has non-finite entries");

    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success)
        throw numerical_error("thin_svd: SVD did not converge");

    SvdResult r{svd.matrixU(), svd.singularValues(), svd.matrixV()};

    // Deterministic column orientation: make the largest-magnitude entry of
    // each U column positive and flip the paired V column with it, which
    // leaves U * diag(S) * V^T unchanged.
    for (Eigen::Index j = 0; j < r.u.cols(); ++j) {
        Eigen::Index imax = 0;
        r.u.col(j).cwiseAbs().maxCoeff(&imax);
        if (r.u(imax, j) < 0.0) {
            r.u.col(j) = -r.u.col(j);
            if (j < r.v.cols()) r.v.col(j) = -r.v.col(j);
        }
    }
    return r;
}

int numeric_rank(const Matrix& a, double tol) {
    if (tol < 0.0)
        throw std::invalid_argument("numeric_rank: tolerance must be >= 0");
    if (a.size() == 0) return 0;
    return static_cast<int>(thin_svd(a).rank_count(tol));
}

int numeric_rank(const Matrix& a) {
    return numeric_rank(a, default_rank_tol(a.rows(), a.cols()));
}

Matrix svd_solve(const SvdResult& svd, const Matrix& rhs, double tol) {
    const Eigen::Index r = svd.rank_count(tol);
    if (r == 0) return Matrix::Zero(svd.v.rows(), rhs.cols());
    Matrix ut_b = svd.u.leftCols(r).transpose() * rhs;
    ut_b.array().colwise() /= svd.s.head(r).array();
    return svd.v.leftCols(r) * ut_b;
}

Matrix pinv(const Matrix& a, double tol) {
    if (tol < 0.0)
        throw std::invalid_argument("pinv: tolerance must be >= 0");
    SvdResult svd = thin_svd(a);
    const Eigen::Index r = svd.rank_count(tol);
    if (r == 0) return Matrix::Zero(a.cols(), a.rows());
    return svd.v.leftCols(r) * svd.s.head(r).cwiseInverse().asDiagonal() *
           svd.u.leftCols(r).transpose();
}

Matrix pinv(const Matrix& a) { return pinv(a, default_rank_tol(a.rows(), a.cols())); }

Matrix lstsq(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows())
        throw std::invalid_argument("lstsq: dimension mismatch, A has " +
                                    std::to_string(a.rows()) + " rows, b has " +
                                    std::to_string(b.rows()));
    SvdResult svd = thin_svd(a);
    return svd_solve(svd, b, default_rank_tol(a.rows(), a.cols()));
}

Vector lstsq(const Matrix& a, const Vector& b) {
    return lstsq(a, static_cast<const Matrix&>(b)).col(0);
}

} // namespace telm
