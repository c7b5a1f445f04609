// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <filesystem>
#include <utility>
#include <vector>

#include "telm/tensor.hpp"

namespace telm {

/// Tensor file format shared by every tool: `path` holds raw little-endian
/// 64-bit floats in storage order (first index fastest) and `path` + ".json"
/// is a sidecar {"shape": [...], "dtype": "f64",
/// "layout": "first-index-fastest", "complex": false|true}. Complex data
/// occupies two consecutive planes: all real parts, then all imaginary
/// parts.
void save_tensor(const Tensor& x, const std::filesystem::path& path);

/// Loads a real tensor written by save_tensor. Throws std::runtime_error on
/// missing/garbled files and when the sidecar declares complex data.
Tensor load_tensor(const std::filesystem::path& path);

void save_complex_tensor(const Shape& shape, const std::vector<std::complex<double>>& values,
                         const std::filesystem::path& path);

std::pair<Shape, std::vector<std::complex<double>>> load_complex_tensor(
    const std::filesystem::path& path);

/// Raw little-endian f64 array with no sidecar (label files and the like).
void save_doubles(const std::vector<double>& v, const std::filesystem::path& path);
std::vector<double> load_doubles(const std::filesystem::path& path);

} // namespace telm
