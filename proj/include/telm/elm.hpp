// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "telm/rng.hpp"
#include "telm/tensor.hpp"

namespace telm {

/// Logistic activation 1 / (1 + exp(-x)); saturates at the extremes.
double sigmoid(double x);

/// Random hidden layer: L weight tensors of one shape plus L biases, all
/// drawn i.i.d. from a continuous distribution.
struct HiddenLayer {
    std::vector<Tensor> weights;
    std::vector<double> biases;

    std::size_t size() const { return weights.size(); }
};

/// Draws weights and biases uniform on (-1, 1): per unit, the weight
/// entries in flat storage order followed by that unit's bias. A layer is
/// therefore reproducible from (seed, L, weight_shape) alone.
HiddenLayer draw_hidden_layer(std::size_t L, const Shape& weight_shape, Rng& rng);

struct HiddenMatrix {
    Matrix h;             // N x L, entry (i, j) = sigmoid(inner(W_j, X_i) + b_j)
    std::uint64_t mults;  // exactly N * L * prod(weight shape)
};

/// Hidden-layer activations for a batch of samples. Sample shapes must all
/// equal the weight shape.
HiddenMatrix hidden_matrix(std::span<const Tensor> samples, const HiddenLayer& layer);

enum class ModelKind { Elm, Telm, Tdelm };

struct TrainStats {
    double residual = 0.0;      // |H beta - T| on the training batch
    int h_rank = 0;             // numeric rank of H
    bool rank_deficient = false;  // h_rank < min(N, L)
    std::size_t core_collisions = 0;  // Tdelm: core pairs closer than 1e-12
    double train_seconds = 0.0;
    double decompose_seconds = 0.0;  // Tdelm: one-time cost, kept separate
    std::uint64_t mults = 0;         // hidden-matrix multiplications
};

/// Immutable after training; safe to share across threads for predict.
struct TrainedModel {
    ModelKind kind = ModelKind::Telm;
    HiddenLayer hidden;
    Vector beta;
    std::vector<Matrix> factors;  // Tdelm only: shared per-mode bases
    Shape input_shape;            // sample shape before any projection
    std::uint64_t seed = 0;
    TrainStats stats;
};

/// Tensor-input ELM: draws a hidden layer seeded by `seed`, computes H and
/// solves beta = pinv(H) * labels (minimal-norm least squares). Duplicate
/// samples make H rank-deficient; that is flagged, not an error.
TrainedModel train_telm(std::span<const Tensor> samples, const std::vector<double>& labels,
                        std::size_t L, std::uint64_t seed);

/// Traditional vector-input ELM: identical to train_telm after flattening
/// every sample to order 1. With equal seeds the two produce identical
/// models, since a tensor inner product is the dot of the flattenings.
TrainedModel train_elm_vector(std::span<const Tensor> samples, const std::vector<double>& labels,
                              std::size_t L, std::uint64_t seed);

/// Tucker-decomposed ELM: decomposes the sample batch to cores of shape
/// `ranks` with shared factors, then trains on the cores with core-shaped
/// weights. Each inner product then costs prod(ranks) instead of
/// prod(input shape) multiplications. When ranks equal the input shape the
/// decomposition is skipped (identity factors, cores = samples), which
/// makes the model coincide with train_telm at the same seed.
TrainedModel train_tdelm(std::span<const Tensor> samples, const std::vector<double>& labels,
                         std::size_t L, const Shape& ranks, std::uint64_t seed);

/// Tdelm training from a precomputed decomposition, so one decomposition
/// can be shared across repeated trainings. cores[i] must be factor-basis
/// cores of the sample with label labels[i]; input_shape is the original
/// sample shape expected by predict.
TrainedModel train_tdelm_on_cores(std::span<const Tensor> cores,
                                  const std::vector<Matrix>& factors, const Shape& input_shape,
                                  const std::vector<double>& labels, std::size_t L,
                                  std::uint64_t seed);

/// Model output for one input of the original sample shape. Tdelm inputs
/// are first projected through the stored factors; Elm inputs are
/// flattened.
double predict(const TrainedModel& model, const Tensor& x);

std::vector<double> predict_batch(const TrainedModel& model, std::span<const Tensor> xs);

/// Writes manifest.json plus tensor files for weights and factors into
/// `dir` (created if absent); load_model restores a model that predicts
/// identically.
void save_model(const TrainedModel& model, const std::filesystem::path& dir);
TrainedModel load_model(const std::filesystem::path& dir);

} // namespace telm
