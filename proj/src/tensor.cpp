// SPDX-License-Identifier: Apache-2.0
#include "telm/tensor.hpp"

#include <cmath>

namespace telm {

namespace {

void check_mode(const Tensor& x, std::size_t mode) {
    if (mode >= x.order())
        throw std::invalid_argument("mode " + std::to_string(mode) +
                                    " out of range for order-" +
                                    std::to_string(x.order()) + " tensor");
}

// Collapsed sizes around a mode: values can be viewed as a (lead, I_k, trail)
// block with `lead` fastest.
struct ModeSplit {
    std::size_t lead = 1;
    std::size_t dim = 1;
    std::size_t trail = 1;
};

ModeSplit split_at(const Shape& shape, std::size_t mode) {
    ModeSplit s;
    for (std::size_t m = 0; m < mode; ++m) s.lead *= shape[m];
    s.dim = shape[mode];
    for (std::size_t m = mode + 1; m < shape.size(); ++m) s.trail *= shape[m];
    return s;
}

} // namespace

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    if (shape_.empty())
        throw std::invalid_argument("tensor order must be >= 1");
    for (std::size_t d : shape_)
        if (d == 0)
            throw std::invalid_argument("tensor dimensions must be >= 1");
    if (values_.size() != shape_product(shape_))
        throw std::invalid_argument(
            "value count " + std::to_string(values_.size()) +
            " does not match shape " + shape_to_string(shape_));
    for (double v : values_)
        if (!std::isfinite(v))
            throw std::invalid_argument("tensor values must be finite");
}

Tensor Tensor::zeros(Shape shape) {
    std::size_t n = shape_product(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::from_matrix(const Matrix& m) {
    // Eigen's default storage is column-major, which is exactly the
    // first-index-fastest layout for an order-2 tensor.
    std::vector<double> v(m.data(), m.data() + m.size());
    return Tensor({static_cast<std::size_t>(m.rows()),
                   static_cast<std::size_t>(m.cols())},
                  std::move(v));
}

double Tensor::at(std::span<const std::size_t> idx) const {
    if (idx.size() != order())
        throw std::invalid_argument("index order mismatch");
    std::size_t flat = 0, stride = 1;
    for (std::size_t k = 0; k < order(); ++k) {
        if (idx[k] >= shape_[k])
            throw std::invalid_argument("index out of range in mode " + std::to_string(k));
        flat += idx[k] * stride;
        stride *= shape_[k];
    }
    return values_[flat];
}

std::vector<double> vectorize(const Tensor& x) { return x.values(); }

Matrix matricize(const Tensor& x, std::size_t mode) {
    check_mode(x, mode);
    const auto s = split_at(x.shape(), mode);
    Matrix m(s.dim, s.lead * s.trail);
    const double* v = x.data();
    for (std::size_t t = 0; t < s.trail; ++t)
        for (std::size_t i = 0; i < s.dim; ++i)
            for (std::size_t l = 0; l < s.lead; ++l)
                m(i, l + t * s.lead) = v[l + i * s.lead + t * s.lead * s.dim];
    return m;
}

Tensor fold(const Matrix& m, std::size_t mode, const Shape& shape) {
    if (mode >= shape.size())
        throw std::invalid_argument("fold mode out of range");
    const auto s = split_at(shape, mode);
    if (static_cast<std::size_t>(m.rows()) != s.dim ||
        static_cast<std::size_t>(m.cols()) != s.lead * s.trail)
        throw std::invalid_argument("fold: matrix dimensions do not match shape");
    std::vector<double> v(shape_product(shape));
    for (std::size_t t = 0; t < s.trail; ++t)
        for (std::size_t i = 0; i < s.dim; ++i)
            for (std::size_t l = 0; l < s.lead; ++l)
                v[l + i * s.lead + t * s.lead * s.dim] = m(i, l + t * s.lead);
    return Tensor(shape, std::move(v));
}

double inner(const Tensor& x, const Tensor& y) {
    if (!x.same_shape(y))
        throw std::invalid_argument("inner: shape mismatch " +
                                    shape_to_string(x.shape()) + " vs " +
                                    shape_to_string(y.shape()));
    double acc = 0.0;
    const double* a = x.data();
    const double* b = y.data();
    for (std::size_t i = 0; i < x.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm(const Tensor& x) { return std::sqrt(inner(x, x)); }

Tensor mode_product(const Tensor& x, const Matrix& m, std::size_t mode) {
    check_mode(x, mode);
    if (static_cast<std::size_t>(m.cols()) != x.dim(mode))
        throw std::invalid_argument(
            "mode_product: matrix has " + std::to_string(m.cols()) +
            " columns, mode " + std::to_string(mode) + " has size " +
            std::to_string(x.dim(mode)));
    Shape out_shape = x.shape();
    out_shape[mode] = static_cast<std::size_t>(m.rows());
    return fold(m * matricize(x, mode), mode, out_shape);
}

Tensor stack_last(std::span<const Tensor> tensors) {
    if (tensors.empty())
        throw std::invalid_argument("stack_last: empty tensor list");
    const Shape& base = tensors.front().shape();
    for (const Tensor& t : tensors)
        if (t.shape() != base)
            throw std::invalid_argument("stack_last: shape mismatch");
    Shape out_shape = base;
    out_shape.push_back(tensors.size());
    std::vector<double> v;
    v.reserve(shape_product(out_shape));
    // The last index is slowest-varying, so each input is one contiguous block.
    for (const Tensor& t : tensors)
        v.insert(v.end(), t.values().begin(), t.values().end());
    return Tensor(std::move(out_shape), std::move(v));
}

Tensor slice_last(const Tensor& x, std::size_t index) {
    if (x.order() < 2)
        throw std::invalid_argument("slice_last: tensor must have order >= 2");
    std::size_t n = x.shape().back();
    if (index >= n)
        throw std::invalid_argument("slice_last: index out of range");
    Shape out_shape(x.shape().begin(), x.shape().end() - 1);
    std::size_t block = shape_product(out_shape);
    std::vector<double> v(x.values().begin() + index * block,
                          x.values().begin() + (index + 1) * block);
    return Tensor(std::move(out_shape), std::move(v));
}

bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape() && a.values() == b.values();
}

} // namespace telm
