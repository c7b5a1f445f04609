// SPDX-License-Identifier: Apache-2.0
#include "telm/channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "telm/rng.hpp"

namespace telm {

namespace {

constexpr double kPi = std::numbers::pi;

/// Box-Muller transform; two uniform draws per value.
double gaussian(Rng& rng) {
    const double u1 = rng.uniform();
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * kPi * u2);
}

void validate_config(const ChannelConfig& cfg) {
    if (cfg.tx < 1 || cfg.rx < 1 || cfg.freq < 1)
        throw std::invalid_argument("generate_channel: all grid dimensions must be >= 1");
    if (cfg.paths < 1) throw std::invalid_argument("generate_channel: paths must be >= 1");
    if (cfg.delay_spread < 0.0 || cfg.angle_spread < 0.0 || cfg.noise_std < 0.0 ||
        cfg.gain_decay <= 0.0)
        throw std::invalid_argument("generate_channel: spreads and gains must be positive");
}

std::pair<double, double> plane_moments(const ChannelGrid& grid, Plane plane) {
    double mean = 0.0;
    for (const auto& v : grid.values) mean += plane == Plane::Real ? v.real() : v.imag();
    mean /= static_cast<double>(grid.values.size());
    double var = 0.0;
    for (const auto& v : grid.values) {
        const double d = (plane == Plane::Real ? v.real() : v.imag()) - mean;
        var += d * d;
    }
    var /= static_cast<double>(grid.values.size());
    return {mean, std::sqrt(var)};
}

// Magnitudes of the pilot offsets in descending order, e.g. W=4 -> {3, 1}.
// The full signed offset list {-(W-1), ..., -3, -1, +1, +3, ..., +(W-1)} is
// formed at the call site as target -/+ magnitude.
std::vector<std::size_t> pilot_offsets(std::size_t window) {
    std::vector<std::size_t> mags;
    for (std::size_t m = window - 1;; m -= 2) {
        mags.push_back(m);
        if (m == 1) break;
    }
    return mags;
}

} // namespace

ChannelGrid generate_channel(const ChannelConfig& cfg, std::uint64_t seed) {
    validate_config(cfg);
    Rng rng(seed);

    // Per-path parameters, drawn receive location by receive location.
    std::vector<double> sin_theta(cfg.rx * cfg.paths);
    std::vector<double> delay(cfg.rx * cfg.paths);
    std::vector<std::complex<double>> alpha(cfg.rx * cfg.paths);
    for (std::size_t k = 0; k < cfg.rx; ++k) {
        for (std::size_t p = 0; p < cfg.paths; ++p) {
            const std::size_t idx = k * cfg.paths + p;
            sin_theta[idx] = rng.uniform(-cfg.angle_spread, cfg.angle_spread);
            delay[idx] = rng.uniform(0.0, cfg.delay_spread);
            const double phase = rng.uniform(0.0, 2.0 * kPi);
            const double gain = std::pow(cfg.gain_decay, static_cast<double>(p));
            alpha[idx] = std::polar(gain, phase);
        }
    }

    ChannelGrid grid;
    grid.tx = cfg.tx;
    grid.rx = cfg.rx;
    grid.freq = cfg.freq;
    grid.values.assign(cfg.tx * cfg.rx * cfg.freq, {0.0, 0.0});
    for (std::size_t f = 0; f < cfg.freq; ++f) {
        for (std::size_t k = 0; k < cfg.rx; ++k) {
            for (std::size_t p = 0; p < cfg.paths; ++p) {
                const std::size_t idx = k * cfg.paths + p;
                // 1-based subcarrier index in the delay phase term.
                const std::complex<double> path =
                    alpha[idx] *
                    std::polar(1.0, -2.0 * kPi * static_cast<double>(f + 1) * delay[idx]);
                for (std::size_t j = 0; j < cfg.tx; ++j)
                    grid.at(j, k, f) +=
                        path * std::polar(1.0, -kPi * static_cast<double>(j) * sin_theta[idx]);
            }
        }
    }

    if (cfg.noise_std > 0.0)
        for (auto& v : grid.values)
            v += std::complex<double>(cfg.noise_std * gaussian(rng),
                                      cfg.noise_std * gaussian(rng));
    return grid;
}

Tensor plane_tensor(const ChannelGrid& grid, Plane plane) {
    std::vector<double> v(grid.values.size());
    for (std::size_t i = 0; i < grid.values.size(); ++i)
        v[i] = plane == Plane::Real ? grid.values[i].real() : grid.values[i].imag();
    return Tensor({grid.tx, grid.rx, grid.freq}, std::move(v));
}

std::pair<ChannelGrid, NormStats> normalize(const ChannelGrid& grid) {
    if (grid.values.empty()) throw std::invalid_argument("normalize: empty grid");
    NormStats stats;
    std::tie(stats.real_mean, stats.real_std) = plane_moments(grid, Plane::Real);
    std::tie(stats.imag_mean, stats.imag_std) = plane_moments(grid, Plane::Imag);
    if (stats.real_std == 0.0 || stats.imag_std == 0.0)
        throw std::invalid_argument("normalize: a plane has zero variance");

    ChannelGrid out = grid;
    for (auto& v : out.values)
        v = {(v.real() - stats.real_mean) / stats.real_std,
             (v.imag() - stats.imag_mean) / stats.imag_std};
    return {std::move(out), stats};
}

std::pair<WindowDataset, WindowDataset> build_interpolation_dataset(const ChannelGrid& grid,
                                                                    std::size_t window,
                                                                    WindowMode mode,
                                                                    std::size_t label_tx,
                                                                    std::size_t label_rx) {
    if (window == 0 || window % 2 != 0)
        throw std::invalid_argument("build_interpolation_dataset: window must be even and > 0");
    if (label_tx >= grid.tx || label_rx >= grid.rx)
        throw std::invalid_argument("build_interpolation_dataset: label pair out of range");

    // 1-based window subcarrier indices per valid even target.
    std::vector<std::size_t> targets;
    std::vector<std::vector<std::size_t>> window_indices;
    for (std::size_t target = 2; target <= grid.freq; target += 2) {
        std::vector<std::size_t> idx;
        if (mode == WindowMode::Pilot) {
            // Offsets -(W-1), ..., -3, -1, +1, +3, ..., +(W-1): odd pilot
            // positions around the even target, ascending.
            const auto mags = pilot_offsets(window);
            bool ok = target > mags.front() && target + mags.front() <= grid.freq;
            if (!ok) continue;
            for (auto m = mags.begin(); m != mags.end(); ++m) idx.push_back(target - *m);
            for (auto m = mags.rbegin(); m != mags.rend(); ++m) idx.push_back(target + *m);
        } else {
            // W consecutive subcarriers ending just before the target.
            if (target <= window) continue;
            for (std::size_t s = target - window; s < target; ++s) idx.push_back(s);
        }
        targets.push_back(target);
        window_indices.push_back(std::move(idx));
    }
    if (targets.empty())
        throw std::invalid_argument(
            "build_interpolation_dataset: no even target has a complete window (freq too small)");

    std::pair<WindowDataset, WindowDataset> out;
    for (Plane plane : {Plane::Real, Plane::Imag}) {
        WindowDataset& ds = plane == Plane::Real ? out.first : out.second;
        ds.plane = plane;
        ds.window = window;
        ds.label_tx = label_tx;
        ds.label_rx = label_rx;
        ds.target_subcarriers = targets;
        ds.features.reserve(targets.size());
        ds.labels.reserve(targets.size());
        for (std::size_t t = 0; t < targets.size(); ++t) {
            std::vector<double> v(grid.tx * grid.rx * window);
            for (std::size_t w = 0; w < window; ++w) {
                const std::size_t f = window_indices[t][w] - 1; // to 0-based
                for (std::size_t k = 0; k < grid.rx; ++k)
                    for (std::size_t j = 0; j < grid.tx; ++j) {
                        const auto value = grid.at(j, k, f);
                        v[j + grid.tx * (k + grid.rx * w)] =
                            plane == Plane::Real ? value.real() : value.imag();
                    }
            }
            ds.features.emplace_back(Shape{grid.tx, grid.rx, window}, std::move(v));
            const auto label = grid.at(label_tx, label_rx, targets[t] - 1);
            ds.labels.push_back(plane == Plane::Real ? label.real() : label.imag());
        }
    }
    return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, std::size_t first_count, std::uint64_t seed) {
    if (first_count > n)
        throw std::invalid_argument("split_indices: first_count exceeds element count");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(seed);
    shuffle(idx, rng);
    std::vector<std::size_t> first(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(first_count));
    std::vector<std::size_t> second(idx.begin() + static_cast<std::ptrdiff_t>(first_count), idx.end());
    return {std::move(first), std::move(second)};
}

WindowDataset subset(const WindowDataset& ds, std::span<const std::size_t> idx) {
    WindowDataset out;
    out.plane = ds.plane;
    out.window = ds.window;
    out.label_tx = ds.label_tx;
    out.label_rx = ds.label_rx;
    out.features.reserve(idx.size());
    out.labels.reserve(idx.size());
    out.target_subcarriers.reserve(idx.size());
    for (std::size_t i : idx) {
        if (i >= ds.features.size()) throw std::invalid_argument("subset: index out of range");
        out.features.push_back(ds.features[i]);
        out.labels.push_back(ds.labels[i]);
        out.target_subcarriers.push_back(ds.target_subcarriers[i]);
    }
    return out;
}

std::pair<WindowDataset, WindowDataset> split_even(const WindowDataset& ds, std::uint64_t seed) {
    const std::size_t n = ds.features.size();
    if (n < 2) throw std::invalid_argument("split_even: need at least 2 samples");
    auto [first, second] = split_indices(n, (n + 1) / 2, seed);
    return {subset(ds, first), subset(ds, second)};
}

} // namespace telm
