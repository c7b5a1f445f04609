// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "telm/tensor.hpp"

namespace telm {

/// Synthetic multipath MIMO-OFDM channel parameters. The model is a
/// half-wavelength uniform linear transmit array observed at `rx` receive
/// locations over `freq` subcarriers:
///   H_{j,k}(f) = sum_p alpha_{k,p} exp(-i pi (j-1) sin theta_{k,p})
///                              exp(-i 2 pi f delta_tau_{k,p})
/// with per-path random gain phase, direction and delay. Small delay_spread
/// keeps adjacent subcarriers strongly correlated, which is what makes
/// window interpolation meaningful.
struct ChannelConfig {
    std::size_t tx = 16;    // J, transmit array elements
    std::size_t rx = 3;     // R, receive locations
    std::size_t freq = 256; // F, subcarriers
    std::size_t paths = 5;  // P, multipath components per receive location

    double delay_spread = 0.03; // delays drawn uniform on (0, delay_spread)
    double angle_spread = 1.0;  // sin(theta) drawn uniform on (-spread, spread)
    double gain_decay = 0.5;    // path p has amplitude gain_decay^p
    double noise_std = 0.0;     // additive white Gaussian noise, off by default

    // Carrier metadata, documentation only.
    double center_frequency_ghz = 2.6;
    double bandwidth_mhz = 20.0;
};

/// Complex frequency response on a (tx, rx, freq) grid, tx index fastest.
struct ChannelGrid {
    std::size_t tx = 0;
    std::size_t rx = 0;
    std::size_t freq = 0;
    std::vector<std::complex<double>> values;

    std::complex<double> at(std::size_t j, std::size_t k, std::size_t f) const {
        return values[j + tx * (k + rx * f)];
    }
    std::complex<double>& at(std::size_t j, std::size_t k, std::size_t f) {
        return values[j + tx * (k + rx * f)];
    }
};

/// Deterministic in (cfg, seed); different seeds give different grids.
ChannelGrid generate_channel(const ChannelConfig& cfg, std::uint64_t seed);

enum class Plane { Real, Imag };

/// One plane of the grid as a (tx, rx, freq) tensor.
Tensor plane_tensor(const ChannelGrid& grid, Plane plane);

/// Per-plane shift/scale recorded by normalize, enough to de-normalize
/// predictions: original = normalized * std + mean.
struct NormStats {
    double real_mean = 0.0;
    double real_std = 1.0;
    double imag_mean = 0.0;
    double imag_std = 1.0;
};

/// Shifts and scales each plane to zero mean and unit standard deviation
/// over the whole grid. Throws std::invalid_argument when a plane is
/// constant (zero variance).
std::pair<ChannelGrid, NormStats> normalize(const ChannelGrid& grid);

/// Pilot: windows hold the W odd-offset pilots {-(W-1), ..., -3, -1, +1,
/// +3, ..., +(W-1)} around each even target subcarrier. Consecutive: the
/// escape hatch with windows of W consecutive subcarriers [2l-W, 2l-1]
/// before each even target 2l.
enum class WindowMode { Pilot, Consecutive };

/// Per-plane interpolation dataset: one sample per covered even target
/// subcarrier. Feature i has shape (tx, rx, W) holding the plane values at
/// the window subcarriers (ascending offset along the last mode); label i
/// is the plane value at (label_tx, label_rx, target). Subcarrier indices
/// are 1-based.
struct WindowDataset {
    std::vector<Tensor> features;
    std::vector<double> labels;
    std::vector<std::size_t> target_subcarriers;
    Plane plane = Plane::Real;
    std::size_t window = 0;
    std::size_t label_tx = 0; // 0-based designated pair for scalar labels
    std::size_t label_rx = 0;
};

/// Builds the real-plane and imaginary-plane datasets (sample i refers to
/// the same target subcarrier in both). Targets without a complete window
/// are dropped. W must be even and positive; throws std::invalid_argument
/// when no target has a full window.
std::pair<WindowDataset, WindowDataset> build_interpolation_dataset(
    const ChannelGrid& grid, std::size_t window, WindowMode mode = WindowMode::Pilot,
    std::size_t label_tx = 0, std::size_t label_rx = 0);

/// Seeded shuffle of {0, ..., n-1} cut after first_count entries. The same
/// (n, first_count, seed) always produces the same split, so parallel
/// datasets stay aligned when split with shared arguments.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, std::size_t first_count, std::uint64_t seed);

/// Rows of ds selected by idx, in idx order.
WindowDataset subset(const WindowDataset& ds, std::span<const std::size_t> idx);

/// Disjoint random halves of sizes (ceil(N/2), floor(N/2)); N >= 2.
std::pair<WindowDataset, WindowDataset> split_even(const WindowDataset& ds, std::uint64_t seed);

} // namespace telm
