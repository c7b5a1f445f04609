// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace telm {

/// Tensor dimensions (I_1, ..., I_K), all entries >= 1.
using Shape = std::vector<std::size_t>;

/// Thrown when an algorithm fails numerically (SVD non-convergence,
/// divergent optimization, ...). Contract violations use std::invalid_argument.
class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::size_t shape_product(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

inline std::string shape_to_string(const Shape& shape) {
    std::string s = "(";
    for (std::size_t k = 0; k < shape.size(); ++k) {
        if (k) s += ",";
        s += std::to_string(shape[k]);
    }
    return s + ")";
}

} // namespace telm
