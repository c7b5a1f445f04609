// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "telm/tensor.hpp"

namespace telm {

/// Arithmetic mean of one subchannel's window values; the windowed-mean
/// interpolation baseline. Throws std::invalid_argument on an empty window.
double mean_predict(std::span<const double> window_values);

/// Training rows for one (tx, rx, plane) subchannel: one window per sample.
struct SubchannelSamples {
    Matrix windows; // N x W
    Vector labels;  // N
};

/// Per-subchannel least-squares window weights. With bias enabled each
/// weight vector carries one extra trailing intercept entry.
struct LmseWeights {
    std::vector<Vector> weights;
    bool bias = false;
    std::vector<bool> degenerate; // true where a subchannel's windows were all zero
};

/// Batch least-squares fit of label against window per subchannel
/// (minimal-norm when underdetermined). Degenerate all-zero subchannels get
/// minimal-norm (zero) weights and a flag rather than an error.
LmseWeights train_lmse(std::span<const SubchannelSamples> subchannels, bool bias = false);

double lmse_predict(const LmseWeights& w, std::size_t subchannel,
                    std::span<const double> window_values);

struct SlfnOptions {
    std::size_t epochs = 2000;
    double step = 0.01;
    double init_scale = 0.1; // parameters start uniform(-init_scale, init_scale)
};

/// Single-hidden-layer network parameters trained by gradient descent:
/// hidden weights column j pairs with bias b(j) and output weight beta(j).
struct SlfnParams {
    Matrix w;    // P x L
    Vector b;    // L
    Vector beta; // L
};

struct SlfnModel {
    SlfnParams params;
    Shape input_shape;
    std::vector<double> loss_curve; // accepted loss after each epoch, non-increasing
    double final_step = 0.0;        // step size after all halvings
    double train_seconds = 0.0;
};

/// Sum of squared errors sum_i (o_i - t_i)^2 over rows of `samples`
/// (flattened inputs, one per row).
double slfn_loss(const SlfnParams& p, const Matrix& samples, const Vector& labels);

/// Analytic gradient of slfn_loss with respect to every parameter, laid out
/// like SlfnParams.
SlfnParams slfn_gradient(const SlfnParams& p, const Matrix& samples, const Vector& labels);

/// Full-batch gradient descent from a small random init. An epoch whose
/// update would increase the loss is rejected and the step halved, so the
/// recorded loss curve never increases. A non-finite loss aborts with
/// numerical_error naming the last finite epoch.
SlfnModel train_slfn_gd(std::span<const Tensor> samples, const std::vector<double>& labels,
                        std::size_t L, const SlfnOptions& opts, std::uint64_t seed);

double slfn_predict(const SlfnModel& m, const Tensor& x);
std::vector<double> slfn_predict_batch(const SlfnModel& m, std::span<const Tensor> xs);

} // namespace telm
