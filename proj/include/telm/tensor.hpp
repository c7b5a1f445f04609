// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "telm/common.hpp"

namespace telm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense tensor of 64-bit reals with first-index-fastest flat storage:
/// element (i_0, ..., i_{K-1}) lives at offset sum_k i_k * stride_k with
/// stride_0 = 1 and stride_k = I_0 * ... * I_{k-1}. An order-2 tensor is
/// therefore a column-major matrix. All values must be finite; instances
/// are immutable once constructed and safe to share across threads.
class Tensor {
public:
    Tensor() = default;

    /// Validating constructor: values.size() must equal the shape product,
    /// every dimension must be >= 1 and every value finite.
    Tensor(Shape shape, std::vector<double> values);

    static Tensor zeros(Shape shape);
    static Tensor from_matrix(const Matrix& m);

    const Shape& shape() const { return shape_; }
    std::size_t order() const { return shape_.size(); }
    std::size_t size() const { return values_.size(); }
    std::size_t dim(std::size_t k) const { return shape_.at(k); }
    const std::vector<double>& values() const { return values_; }
    const double* data() const { return values_.data(); }

    double operator[](std::size_t flat) const { return values_[flat]; }

    /// Checked element access by multi-index (0-based, one index per mode).
    double at(std::span<const std::size_t> idx) const;
    double at(std::initializer_list<std::size_t> idx) const {
        return at(std::span<const std::size_t>(idx.begin(), idx.size()));
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

private:
    Shape shape_;
    std::vector<double> values_;
};

/// Flat copy of the values in storage order. A bijection for fixed shape:
/// Tensor(shape, vectorize(x)) == x.
std::vector<double> vectorize(const Tensor& x);

/// Mode-k unfolding (0-based mode): an I_k x prod_{j!=k} I_j matrix whose
/// column for multi-index (i_0,...,i_{K-1}) with i_k removed is
/// sum_{m<k} i_m * J_m + sum_{m>k} i_m * J_m, J_m = prod_{m'<m, m'!=k} I_{m'}.
Matrix matricize(const Tensor& x, std::size_t mode);

/// Inverse of matricize: folds an I_k x prod_{j!=k} I_j matrix back into a
/// tensor of the given shape along the given mode.
Tensor fold(const Matrix& m, std::size_t mode, const Shape& shape);

/// Sum of elementwise products; shapes must match.
double inner(const Tensor& x, const Tensor& y);

/// Frobenius norm.
double norm(const Tensor& x);

/// Mode-k product with a matrix mapping the mode-k dimension I_k to m.rows():
/// matricize(result, k) == m * matricize(x, k).
Tensor mode_product(const Tensor& x, const Matrix& m, std::size_t mode);

/// Stacks N equal-shape order-K tensors into an order-(K+1) tensor of shape
/// (I_0, ..., I_{K-1}, N); slice i along the last mode is tensors[i].
Tensor stack_last(std::span<const Tensor> tensors);

/// Extracts slice `index` along the last mode (inverse of stack_last).
Tensor slice_last(const Tensor& x, std::size_t index);

bool operator==(const Tensor& a, const Tensor& b);

} // namespace telm
