// SPDX-License-Identifier: Apache-2.0
#include "telm/tensor_io.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <fstream>
#include <stdexcept>

namespace telm {

// The on-disk format is little-endian; this build targets little-endian
// hosts only.
static_assert(std::endian::native == std::endian::little);

namespace {

using nlohmann::json;

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
    std::filesystem::path p = path;
    p += ".json";
    return p;
}

void write_raw(const double* data, std::size_t count, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(count * sizeof(double)));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<double> read_raw(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
    const std::streamsize bytes = in.tellg();
    if (bytes % static_cast<std::streamsize>(sizeof(double)) != 0)
        throw std::runtime_error("file size is not a multiple of 8 bytes: " + path.string());
    std::vector<double> v(static_cast<std::size_t>(bytes) / sizeof(double));
    in.seekg(0);
    in.read(reinterpret_cast<char*>(v.data()), bytes);
    if (!in) throw std::runtime_error("read failed: " + path.string());
    return v;
}

void write_sidecar(const Shape& shape, bool complex_data, const std::filesystem::path& path) {
    json meta;
    meta["shape"] = shape;
    meta["dtype"] = "f64";
    meta["layout"] = "first-index-fastest";
    meta["complex"] = complex_data;
    std::ofstream out(sidecar_path(path));
    if (!out) throw std::runtime_error("cannot open for writing: " + sidecar_path(path).string());
    out << meta.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + sidecar_path(path).string());
}

json read_sidecar(const std::filesystem::path& path) {
    std::ifstream in(sidecar_path(path));
    if (!in) throw std::runtime_error("cannot open for reading: " + sidecar_path(path).string());
    json meta;
    try {
        in >> meta;
    } catch (const json::exception& e) {
        throw std::runtime_error("bad sidecar " + sidecar_path(path).string() + ": " + e.what());
    }
    if (meta.value("dtype", "") != "f64" || meta.value("layout", "") != "first-index-fastest")
        throw std::runtime_error("unsupported tensor format in " + sidecar_path(path).string());
    return meta;
}

} // namespace

void save_tensor(const Tensor& x, const std::filesystem::path& path) {
    write_raw(x.data(), x.size(), path);
    write_sidecar(x.shape(), false, path);
}

Tensor load_tensor(const std::filesystem::path& path) {
    json meta = read_sidecar(path);
    if (meta.value("complex", false))
        throw std::runtime_error("expected real tensor, sidecar says complex: " + path.string());
    Shape shape = meta.at("shape").get<Shape>();
    std::vector<double> v = read_raw(path);
    if (v.size() != shape_product(shape))
        throw std::runtime_error("tensor data size does not match sidecar shape: " +
                                  path.string());
    return Tensor(std::move(shape), std::move(v));
}

void save_complex_tensor(const Shape& shape, const std::vector<std::complex<double>>& values,
                         const std::filesystem::path& path) {
    if (values.size() != shape_product(shape))
        throw std::invalid_argument("save_complex_tensor: value count does not match shape " +
                                    shape_to_string(shape));
    std::vector<double> planes(values.size() * 2);
    for (std::size_t i = 0; i < values.size(); ++i) {
        planes[i] = values[i].real();
        planes[values.size() + i] = values[i].imag();
    }
    write_raw(planes.data(), planes.size(), path);
    write_sidecar(shape, true, path);
}

std::pair<Shape, std::vector<std::complex<double>>> load_complex_tensor(
    const std::filesystem::path& path) {
    json meta = read_sidecar(path);
    if (!meta.value("complex", false))
        throw std::runtime_error("expected complex tensor, sidecar says real: " + path.string());
    Shape shape = meta.at("shape").get<Shape>();
    std::vector<double> planes = read_raw(path);
    const std::size_t count = shape_product(shape);
    if (planes.size() != 2 * count)
        throw std::runtime_error("tensor data size does not match sidecar shape: " +
                                  path.string());
    std::vector<std::complex<double>> values(count);
    for (std::size_t i = 0; i < count; ++i) values[i] = {planes[i], planes[count + i]};
    return {std::move(shape), std::move(values)};
}

void save_doubles(const std::vector<double>& v, const std::filesystem::path& path) {
    write_raw(v.data(), v.size(), path);
}

std::vector<double> load_doubles(const std::filesystem::path& path) {
    return read_raw(path);
}

} // namespace telm
