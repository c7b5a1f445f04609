// SPDX-License-Identifier: Apache-2.0
#include "telm/baselines.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "telm/elm.hpp"
#include "telm/linalg.hpp"
#include "telm/rng.hpp"

namespace telm {

namespace {

using Clock = std::chrono::steady_clock;

Matrix flatten_samples(std::span<const Tensor> samples) {
    const auto n = static_cast<Eigen::Index>(samples.size());
    const auto p = static_cast<Eigen::Index>(samples[0].size());
    Matrix s(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!samples[static_cast<std::size_t>(i)].same_shape(samples[0]))
            throw std::invalid_argument("train_slfn_gd: sample shapes differ");
        s.row(i) = Eigen::Map<const Vector>(samples[static_cast<std::size_t>(i)].data(), p);
    }
    return s;
}

/// Activations and their sigmoid derivative h (1 - h) for every sample.
struct Activations {
    Matrix h; // N x L
    Matrix d; // N x L, entrywise h (1 - h)
};

Activations forward(const SlfnParams& p, const Matrix& samples) {
    Matrix z = samples * p.w;
    z.rowwise() += p.b.transpose();
    Activations a;
    a.h = z.unaryExpr([](double v) { return sigmoid(v); });
    a.d = a.h.array() * (1.0 - a.h.array());
    return a;
}

} // namespace

double mean_predict(std::span<const double> window_values) {
    if (window_values.empty()) throw std::invalid_argument("mean_predict: empty window");
    double s = 0.0;
    for (double v : window_values) s += v;
    return s / static_cast<double>(window_values.size());
}

LmseWeights train_lmse(std::span<const SubchannelSamples> subchannels, bool bias) {
    if (subchannels.empty()) throw std::invalid_argument("train_lmse: no subchannels");
    LmseWeights out;
    out.bias = bias;
    out.weights.reserve(subchannels.size());
    out.degenerate.reserve(subchannels.size());
    for (const SubchannelSamples& sc : subchannels) {
        if (sc.windows.rows() != sc.labels.size())
            throw std::invalid_argument("train_lmse: window/label row count mismatch");
        if (sc.windows.rows() == 0)
            throw std::invalid_argument("train_lmse: a subchannel has no samples");
        Matrix a = sc.windows;
        if (bias) {
            a.conservativeResize(Eigen::NoChange, a.cols() + 1);
            a.col(a.cols() - 1).setOnes();
        }
        out.degenerate.push_back(sc.windows.cwiseAbs().maxCoeff() == 0.0);
        out.weights.push_back(lstsq(a, sc.labels));
    }
    return out;
}

double lmse_predict(const LmseWeights& w, std::size_t subchannel,
                    std::span<const double> window_values) {
    if (subchannel >= w.weights.size())
        throw std::invalid_argument("lmse_predict: subchannel index out of range");
    const Vector& weights = w.weights[subchannel];
    const auto expected = static_cast<std::size_t>(weights.size()) - (w.bias ? 1 : 0);
    if (window_values.size() != expected)
        throw std::invalid_argument("lmse_predict: window length " +
                                    std::to_string(window_values.size()) + ", expected " +
                                    std::to_string(expected));
    double out = w.bias ? weights(weights.size() - 1) : 0.0;
    for (std::size_t i = 0; i < window_values.size(); ++i)
        out += weights(static_cast<Eigen::Index>(i)) * window_values[i];
    return out;
}

double slfn_loss(const SlfnParams& p, const Matrix& samples, const Vector& labels) {
    Activations a = forward(p, samples);
    return (a.h * p.beta - labels).squaredNorm();
}

SlfnParams slfn_gradient(const SlfnParams& p, const Matrix& samples, const Vector& labels) {
    Activations a = forward(p, samples);
    Vector e = a.h * p.beta - labels; // N

    SlfnParams g;
    g.beta = 2.0 * a.h.transpose() * e;
    g.b.resize(p.b.size());
    g.w.resize(p.w.rows(), p.w.cols());
    for (Eigen::Index j = 0; j < p.b.size(); ++j) {
        Vector ed = e.cwiseProduct(a.d.col(j));
        g.b(j) = 2.0 * p.beta(j) * ed.sum();
        g.w.col(j) = 2.0 * p.beta(j) * (samples.transpose() * ed);
    }
    return g;
}

SlfnModel train_slfn_gd(std::span<const Tensor> samples, const std::vector<double>& labels,
                        std::size_t L, const SlfnOptions& opts, std::uint64_t seed) {
    if (samples.empty()) throw std::invalid_argument("train_slfn_gd: sample list is empty");
    if (labels.size() != samples.size())
        throw std::invalid_argument("train_slfn_gd: label count does not match samples");
    if (L == 0) throw std::invalid_argument("train_slfn_gd: hidden size L must be >= 1");
    if (opts.epochs == 0) throw std::invalid_argument("train_slfn_gd: epochs must be >= 1");
    if (opts.step < 0.0 || opts.init_scale < 0.0)
        throw std::invalid_argument("train_slfn_gd: step and init_scale must be >= 0");

    const auto start = Clock::now();
    Matrix s = flatten_samples(samples);
    Vector t = Eigen::Map<const Vector>(labels.data(), static_cast<Eigen::Index>(labels.size()));
    const auto p_dim = s.cols();
    const auto l_dim = static_cast<Eigen::Index>(L);

    SlfnModel model;
    model.input_shape = samples[0].shape();
    Rng rng(seed);
    SlfnParams& p = model.params;
    p.w.resize(p_dim, l_dim);
    p.b.resize(l_dim);
    p.beta.resize(l_dim);
    for (Eigen::Index j = 0; j < l_dim; ++j) {
        for (Eigen::Index i = 0; i < p_dim; ++i)
            p.w(i, j) = rng.uniform(-opts.init_scale, opts.init_scale);
        p.b(j) = rng.uniform(-opts.init_scale, opts.init_scale);
    }
    for (Eigen::Index j = 0; j < l_dim; ++j)
        p.beta(j) = rng.uniform(-opts.init_scale, opts.init_scale);

    double step = opts.step;
    double loss = slfn_loss(p, s, t);
    if (!std::isfinite(loss)) throw numerical_error("train_slfn_gd: initial loss is not finite");
    model.loss_curve.reserve(opts.epochs);
    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        SlfnParams g = slfn_gradient(p, s, t);
        SlfnParams candidate;
        candidate.w = p.w - step * g.w;
        candidate.b = p.b - step * g.b;
        candidate.beta = p.beta - step * g.beta;
        const double candidate_loss = slfn_loss(candidate, s, t);
        if (!std::isfinite(candidate_loss))
            throw numerical_error("train_slfn_gd: loss diverged at epoch " +
                                  std::to_string(epoch + 1) + ", last finite loss " +
                                  std::to_string(loss));
        if (candidate_loss > loss) {
            step *= 0.5; // reject the update, keep the previous parameters
        } else {
            p = std::move(candidate);
            loss = candidate_loss;
        }
        model.loss_curve.push_back(loss);
    }
    model.final_step = step;
    model.train_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return model;
}

double slfn_predict(const SlfnModel& m, const Tensor& x) {
    if (x.shape() != m.input_shape)
        throw std::invalid_argument("slfn_predict: input shape " + shape_to_string(x.shape()) +
                                    " does not match model input shape " +
                                    shape_to_string(m.input_shape));
    Vector s = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
    Vector z = m.params.w.transpose() * s + m.params.b;
    double out = 0.0;
    for (Eigen::Index j = 0; j < z.size(); ++j) out += m.params.beta(j) * sigmoid(z(j));
    return out;
}

std::vector<double> slfn_predict_batch(const SlfnModel& m, std::span<const Tensor> xs) {
    std::vector<double> out;
    out.reserve(xs.size());
    for (const Tensor& x : xs) out.push_back(slfn_predict(m, x));
    return out;
}

} // namespace telm
