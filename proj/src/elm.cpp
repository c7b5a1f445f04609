// SPDX-License-Identifier: Apache-2.0
#include "telm/elm.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>

#include "telm/linalg.hpp"
#include "telm/tensor_io.hpp"
#include "telm/tucker.hpp"

namespace telm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

const char* kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::Elm: return "elm";
        case ModelKind::Telm: return "telm";
        case ModelKind::Tdelm: return "tdelm";
    }
    throw std::invalid_argument("unknown model kind");
}

ModelKind kind_from_name(const std::string& name) {
    if (name == "elm") return ModelKind::Elm;
    if (name == "telm") return ModelKind::Telm;
    if (name == "tdelm") return ModelKind::Tdelm;
    throw std::runtime_error("unknown model variant: " + name);
}

/// Shared tail of every trainer: draw the layer, build H, solve the
/// minimal-norm least-squares system for beta. `samples` are the tensors H
/// is computed on (original samples, flattened samples, or cores).
TrainedModel train_common(ModelKind kind, std::span<const Tensor> samples,
                          const std::vector<double>& labels, std::size_t L, std::uint64_t seed,
                          Shape input_shape, std::vector<Matrix> factors) {
    if (samples.empty()) throw std::invalid_argument("train: sample list is empty");
    if (labels.size() != samples.size())
        throw std::invalid_argument("train: " + std::to_string(labels.size()) + " labels for " +
                                    std::to_string(samples.size()) + " samples");
    if (L == 0) throw std::invalid_argument("train: hidden size L must be >= 1");

    const auto start = Clock::now();
    TrainedModel m;
    m.kind = kind;
    m.seed = seed;
    m.input_shape = std::move(input_shape);
    m.factors = std::move(factors);

    Rng rng(seed);
    m.hidden = draw_hidden_layer(L, samples[0].shape(), rng);
    HiddenMatrix hm = hidden_matrix(samples, m.hidden);

    SvdResult svd = thin_svd(hm.h);
    const double tol = default_rank_tol(hm.h.rows(), hm.h.cols());
    Matrix t = Eigen::Map<const Matrix>(labels.data(), static_cast<Eigen::Index>(labels.size()), 1);
    m.beta = svd_solve(svd, t, tol).col(0);

    m.stats.residual = (hm.h * m.beta - t.col(0)).norm();
    m.stats.h_rank = static_cast<int>(svd.rank_count(tol));
    m.stats.rank_deficient =
        m.stats.h_rank < static_cast<int>(std::min<std::size_t>(samples.size(), L));
    m.stats.mults = hm.mults;
    m.stats.train_seconds = seconds_since(start);
    return m;
}

std::vector<Matrix> identity_factors(const Shape& shape) {
    std::vector<Matrix> factors;
    factors.reserve(shape.size());
    for (std::size_t d : shape)
        factors.push_back(Matrix::Identity(static_cast<Eigen::Index>(d),
                                           static_cast<Eigen::Index>(d)));
    return factors;
}

/// Projects an input through the model's factor transposes (Tdelm) or
/// flattens it (Elm) before core-space evaluation.
Tensor to_model_space(const TrainedModel& model, const Tensor& x) {
    switch (model.kind) {
        case ModelKind::Telm: return x;
        case ModelKind::Elm: return Tensor({x.size()}, vectorize(x));
        case ModelKind::Tdelm: {
            Tensor z = x;
            for (std::size_t k = 0; k < model.factors.size(); ++k)
                z = mode_product(z, model.factors[k].transpose(), k);
            return z;
        }
    }
    throw std::invalid_argument("unknown model kind");
}

} // namespace

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

HiddenLayer draw_hidden_layer(std::size_t L, const Shape& weight_shape, Rng& rng) {
    if (L == 0) throw std::invalid_argument("draw_hidden_layer: L must be >= 1");
    const std::size_t entries = shape_product(weight_shape);
    HiddenLayer layer;
    layer.weights.reserve(L);
    layer.biases.reserve(L);
    for (std::size_t j = 0; j < L; ++j) {
        std::vector<double> w(entries);
        for (double& v : w) v = rng.uniform(-1.0, 1.0);
        layer.weights.emplace_back(weight_shape, std::move(w));
        layer.biases.push_back(rng.uniform(-1.0, 1.0));
    }
    return layer;
}

HiddenMatrix hidden_matrix(std::span<const Tensor> samples, const HiddenLayer& layer) {
    if (samples.empty()) throw std::invalid_argument("hidden_matrix: sample list is empty");
    if (layer.weights.empty()) throw std::invalid_argument("hidden_matrix: empty hidden layer");
    if (layer.biases.size() != layer.weights.size())
        throw std::invalid_argument("hidden_matrix: bias/weight count mismatch");

    const Shape& wshape = layer.weights[0].shape();
    for (const Tensor& w : layer.weights)
        if (w.shape() != wshape)
            throw std::invalid_argument("hidden_matrix: weight shapes differ");
    for (const Tensor& s : samples)
        if (s.shape() != wshape)
            throw std::invalid_argument("hidden_matrix: sample shape " +
                                        shape_to_string(s.shape()) + " does not match weights " +
                                        shape_to_string(wshape));

    const auto n = static_cast<Eigen::Index>(samples.size());
    const auto l = static_cast<Eigen::Index>(layer.weights.size());
    const auto p = static_cast<Eigen::Index>(shape_product(wshape));

    // inner(W_j, X_i) is the dot product of the flat value arrays, so the
    // whole activation batch is one sample-by-weight matrix product.
    Matrix s(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        s.row(i) = Eigen::Map<const Vector>(samples[static_cast<std::size_t>(i)].data(), p);
    Matrix w(p, l);
    for (Eigen::Index j = 0; j < l; ++j)
        w.col(j) = Eigen::Map<const Vector>(layer.weights[static_cast<std::size_t>(j)].data(), p);

    Matrix h = s * w;
    for (Eigen::Index j = 0; j < l; ++j)
        h.col(j) = (h.col(j).array() + layer.biases[static_cast<std::size_t>(j)])
                       .unaryExpr([](double v) { return sigmoid(v); });

    HiddenMatrix out;
    out.h = std::move(h);
    out.mults = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(l) *
                static_cast<std::uint64_t>(p);
    return out;
}

TrainedModel train_telm(std::span<const Tensor> samples, const std::vector<double>& labels,
                        std::size_t L, std::uint64_t seed) {
    if (samples.empty()) throw std::invalid_argument("train: sample list is empty");
    return train_common(ModelKind::Telm, samples, labels, L, seed, samples[0].shape(), {});
}

TrainedModel train_elm_vector(std::span<const Tensor> samples, const std::vector<double>& labels,
                              std::size_t L, std::uint64_t seed) {
    if (samples.empty()) throw std::invalid_argument("train: sample list is empty");
    std::vector<Tensor> flat;
    flat.reserve(samples.size());
    for (const Tensor& s : samples) flat.emplace_back(Shape{s.size()}, vectorize(s));
    return train_common(ModelKind::Elm, flat, labels, L, seed, samples[0].shape(), {});
}

TrainedModel train_tdelm(std::span<const Tensor> samples, const std::vector<double>& labels,
                         std::size_t L, const Shape& ranks, std::uint64_t seed) {
    if (samples.empty()) throw std::invalid_argument("train: sample list is empty");
    const Shape& shape = samples[0].shape();

    if (ranks == shape) {
        // Full ranks admit the exact Tucker form with identity factors and
        // cores equal to the samples, so the decomposition is skipped and
        // the model coincides with train_telm at the same seed.
        TrainedModel m = train_common(ModelKind::Tdelm, samples, labels, L, seed, shape,
                                      identity_factors(shape));
        m.stats.core_collisions = core_collisions(samples);
        return m;
    }

    const auto start = Clock::now();
    SampleDecomposition d = decompose_samples(samples, ranks);
    const double decompose_seconds = seconds_since(start);

    TrainedModel m = train_common(ModelKind::Tdelm, d.cores, labels, L, seed, shape,
                                  std::move(d.factors));
    m.stats.decompose_seconds = decompose_seconds;
    m.stats.core_collisions = core_collisions(d.cores);
    return m;
}

TrainedModel train_tdelm_on_cores(std::span<const Tensor> cores,
                                  const std::vector<Matrix>& factors, const Shape& input_shape,
                                  const std::vector<double>& labels, std::size_t L,
                                  std::uint64_t seed) {
    if (cores.empty()) throw std::invalid_argument("train: sample list is empty");
    if (factors.size() != input_shape.size() || factors.size() != cores[0].order())
        throw std::invalid_argument("train_tdelm_on_cores: factor count does not match order");
    for (std::size_t k = 0; k < factors.size(); ++k) {
        if (factors[k].rows() != static_cast<Eigen::Index>(input_shape[k]) ||
            factors[k].cols() != static_cast<Eigen::Index>(cores[0].dim(k)))
            throw std::invalid_argument("train_tdelm_on_cores: factor " + std::to_string(k) +
                                        " is " + std::to_string(factors[k].rows()) + "x" +
                                        std::to_string(factors[k].cols()) +
                                        ", incompatible with input shape and core shape");
    }
    TrainedModel m = train_common(ModelKind::Tdelm, cores, labels, L, seed, input_shape, factors);
    m.stats.core_collisions = core_collisions(cores);
    return m;
}

double predict(const TrainedModel& model, const Tensor& x) {
    if (x.shape() != model.input_shape)
        throw std::invalid_argument("predict: input shape " + shape_to_string(x.shape()) +
                                    " does not match model input shape " +
                                    shape_to_string(model.input_shape));
    Tensor z = to_model_space(model, x);
    double out = 0.0;
    for (std::size_t j = 0; j < model.hidden.size(); ++j)
        out += model.beta(static_cast<Eigen::Index>(j)) *
               sigmoid(inner(model.hidden.weights[j], z) + model.hidden.biases[j]);
    return out;
}

std::vector<double> predict_batch(const TrainedModel& model, std::span<const Tensor> xs) {
    std::vector<double> out;
    out.reserve(xs.size());
    for (const Tensor& x : xs) out.push_back(predict(model, x));
    return out;
}

void save_model(const TrainedModel& model, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    nlohmann::json manifest;
    manifest["variant"] = kind_name(model.kind);
    manifest["hidden_size"] = model.hidden.size();
    manifest["input_shape"] = model.input_shape;
    manifest["weight_shape"] = model.hidden.weights.at(0).shape();
    manifest["seed"] = model.seed;
    manifest["beta"] = std::vector<double>(model.beta.data(), model.beta.data() + model.beta.size());
    manifest["biases"] = model.hidden.biases;
    manifest["factor_count"] = model.factors.size();
    manifest["stats"] = {{"residual", model.stats.residual},
                         {"h_rank", model.stats.h_rank},
                         {"rank_deficient", model.stats.rank_deficient},
                         {"core_collisions", model.stats.core_collisions},
                         {"train_seconds", model.stats.train_seconds},
                         {"decompose_seconds", model.stats.decompose_seconds},
                         {"mults", model.stats.mults}};

    std::ofstream out(dir / "manifest.json");
    if (!out) throw std::runtime_error("cannot open for writing: " + (dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + (dir / "manifest.json").string());

    save_tensor(stack_last(model.hidden.weights), dir / "weights.bin");
    for (std::size_t k = 0; k < model.factors.size(); ++k)
        save_tensor(Tensor::from_matrix(model.factors[k]),
                    dir / ("factor_" + std::to_string(k) + ".bin"));
}

TrainedModel load_model(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw std::runtime_error("cannot open for reading: " + (dir / "manifest.json").string());
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("bad manifest " + (dir / "manifest.json").string() + ": " +
                                 e.what());
    }

    TrainedModel m;
    m.kind = kind_from_name(manifest.at("variant").get<std::string>());
    m.input_shape = manifest.at("input_shape").get<Shape>();
    m.seed = manifest.at("seed").get<std::uint64_t>();

    const auto beta = manifest.at("beta").get<std::vector<double>>();
    m.beta = Eigen::Map<const Vector>(beta.data(), static_cast<Eigen::Index>(beta.size()));
    m.hidden.biases = manifest.at("biases").get<std::vector<double>>();

    Tensor stacked = load_tensor(dir / "weights.bin");
    const std::size_t L = stacked.dim(stacked.order() - 1);
    if (L != manifest.at("hidden_size").get<std::size_t>() || L != m.hidden.biases.size() ||
        static_cast<Eigen::Index>(L) != m.beta.size())
        throw std::runtime_error("model manifest is inconsistent: " + dir.string());
    m.hidden.weights.reserve(L);
    for (std::size_t j = 0; j < L; ++j) m.hidden.weights.push_back(slice_last(stacked, j));

    const auto factor_count = manifest.at("factor_count").get<std::size_t>();
    for (std::size_t k = 0; k < factor_count; ++k)
        m.factors.push_back(matricize(load_tensor(dir / ("factor_" + std::to_string(k) + ".bin")), 0));

    const auto& stats = manifest.at("stats");
    m.stats.residual = stats.at("residual").get<double>();
    m.stats.h_rank = stats.at("h_rank").get<int>();
    m.stats.rank_deficient = stats.at("rank_deficient").get<bool>();
    m.stats.core_collisions = stats.at("core_collisions").get<std::size_t>();
    m.stats.train_seconds = stats.at("train_seconds").get<double>();
    m.stats.decompose_seconds = stats.at("decompose_seconds").get<double>();
    m.stats.mults = stats.at("mults").get<std::uint64_t>();
    return m;
}

} // namespace telm
