// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <Eigen/QR>

#include "telm/rng.hpp"
#include "telm/tensor.hpp"

namespace telm::testutil {

inline Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(shape_product(shape));
    for (double& x : v) x = rng.uniform(lo, hi);
    return Tensor(shape, std::move(v));
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng,
                            double lo = -1.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (std::size_t j = 0; j < cols; ++j)
        for (std::size_t i = 0; i < rows; ++i)
            m(i, j) = rng.uniform(lo, hi);
    return m;
}

/// First `cols` columns of the Q factor of a random square matrix:
/// a column-orthonormal rows x cols matrix.
inline Matrix random_orthonormal(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix a = random_matrix(rows, rows, rng);
    Eigen::HouseholderQR<Matrix> qr(a);
    Matrix q = qr.householderQ();
    return q.leftCols(static_cast<Eigen::Index>(cols));
}

/// Tensor with prescribed mode ranks, built as a random core expanded by
/// random full-column-rank factors (generic, so ranks hold almost surely).
inline Tensor random_low_rank_tensor(const Shape& shape, const Shape& ranks, Rng& rng,
                                     bool orthonormal_factors = false,
                                     std::vector<Matrix>* factors_out = nullptr) {
    Tensor core = random_tensor(ranks, rng);
    Tensor x = core;
    std::vector<Matrix> factors;
    for (std::size_t k = 0; k < shape.size(); ++k) {
        Matrix b = orthonormal_factors ? random_orthonormal(shape[k], ranks[k], rng)
                                       : random_matrix(shape[k], ranks[k], rng);
        factors.push_back(b);
        x = mode_product(x, b, k);
    }
    if (factors_out) *factors_out = std::move(factors);
    return x;
}

} // namespace telm::testutil
