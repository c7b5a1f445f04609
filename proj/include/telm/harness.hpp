// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "telm/baselines.hpp"
#include "telm/channel.hpp"
#include "telm/elm.hpp"

namespace telm {

enum class Method { Tdelm, Telm, Elm, TdNn, Nn, Mean, Lmse };

std::string method_name(Method m);
Method parse_method(const std::string& name); // throws std::invalid_argument

struct ExperimentConfig {
    ChannelConfig channel;
    std::uint64_t seed = 0;
    std::size_t window = 4;
    WindowMode window_mode = WindowMode::Pilot;
    std::size_t label_tx = 0;
    std::size_t label_rx = 0;

    std::vector<Method> methods = {Method::Tdelm, Method::Telm, Method::Mean, Method::Lmse};
    std::vector<std::size_t> hidden_sizes = {20, 40};
    std::vector<Shape> rank_grid = {{8, 2, 2}};
    std::size_t repeats = 10;     // SelectBest repetitions for ELM-family methods
    std::size_t nn_repeats = 3;   // gradient-descent methods get fewer repeats
    double validation_fraction = 0.2;
    SlfnOptions slfn;

    std::size_t timing_repetitions = 3;
    std::size_t workers = 1;
};

/// Exact JSON round trip: config_from_json(config_to_json(c)) == c. Unknown
/// keys are rejected so config typos surface as errors.
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

// Plane array indices throughout the harness.
inline constexpr std::size_t kRealPlane = 0;
inline constexpr std::size_t kImagPlane = 1;

/// Channel data generated, normalized, windowed and split for one
/// experiment. Sample i of each plane's dataset refers to the same target
/// subcarrier, so per-plane models may share hidden layers. Selection only
/// ever sees fit and validation; test is touched once per final report
/// entry.
struct PreparedExperiment {
    ExperimentConfig cfg;
    ChannelGrid grid; // normalized
    NormStats norm;
    std::array<WindowDataset, 2> fit;
    std::array<WindowDataset, 2> validation;
    std::array<WindowDataset, 2> test;
};

PreparedExperiment prepare(const ExperimentConfig& cfg);

/// Hidden-matrix multiplication count: N * L * prod(shape) for direct
/// methods, N * L * prod(ranks) for Tucker-core methods, 0 for mean/lmse
/// (they build no hidden matrix). The one-time decomposition cost is
/// reported separately as wall time.
std::uint64_t count_mults(Method method, std::size_t n, std::size_t l, const Shape& input_shape,
                          const Shape& ranks);

/// One trained method over both planes, everything predict needs.
struct MethodModel {
    Method method = Method::Mean;
    std::size_t hidden = 0; // 0 for mean/lmse
    Shape ranks;            // empty for non-Tucker methods
    std::uint64_t seed = 0; // rng stream the winning model was drawn from

    std::array<std::optional<TrainedModel>, 2> elm;   // tdelm/telm/elm
    std::array<std::optional<SlfnModel>, 2> slfn;     // nn/tdnn
    std::array<std::vector<Matrix>, 2> slfn_factors;  // tdnn projection bases
    std::array<std::optional<LmseWeights>, 2> lmse;
};

/// Predictions for every sample of one plane's dataset, normalized space.
std::vector<double> method_predict(const MethodModel& model, std::size_t plane,
                                   const WindowDataset& ds);

double mse(const std::vector<double>& predictions, const std::vector<double>& labels);

/// Complex MSE of a model on a plane pair: real-plane MSE + imag-plane MSE.
double evaluate_mse(const MethodModel& model, const std::array<WindowDataset, 2>& planes);

struct RepeatStats {
    std::size_t repeat = 0;
    double validation_mse = 0.0;
    double train_seconds = 0.0;
};

struct SelectBestResult {
    MethodModel model;
    std::vector<RepeatStats> repeat_stats;
    double validation_mse = 0.0;
    std::size_t best_repeat = 0;
    double decompose_seconds = 0.0; // one-time, shared by all repeats
};

/// Trains `repeats` models on the fit split with rng streams derived as
/// (cell_seed, repeat index) and keeps the one with minimal validation MSE;
/// ties break toward the lowest repeat index. Tucker-core methods decompose
/// the fit split once and share the cores across repeats.
SelectBestResult select_best(const PreparedExperiment& prep, Method method, std::size_t hidden,
                             const Shape& ranks, std::size_t repeats, std::uint64_t cell_seed);

struct MethodReport {
    Method method = Method::Mean;
    double test_mse = 0.0;
    double train_mse = 0.0;       // on the fit split
    double validation_mse = 0.0;  // the winning cell's selection score
    std::size_t hidden = 0;
    Shape ranks;
    std::size_t best_repeat = 0;
    std::size_t repeats = 0;
    std::uint64_t mults = 0;
    std::size_t core_collisions = 0;
    double train_seconds = 0.0;     // median of timing_repetitions
    double decompose_seconds = 0.0; // median, one-time cost kept separate
    double predict_seconds = 0.0;   // median, full test set
    std::vector<double> test_predictions_real;
    std::vector<double> test_predictions_imag;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::size_t fit_samples = 0;
    std::size_t validation_samples = 0;
    std::size_t test_samples = 0;
    std::vector<std::size_t> test_targets;          // 1-based subcarrier per test sample
    std::array<std::vector<double>, 2> test_labels; // ground truth per plane
    std::string environment;
    std::vector<MethodReport> methods;
    double total_seconds = 0.0;
};

/// Full protocol for every requested method: grid search over hidden sizes
/// (x rank tuples for Tucker methods) via select_best on validation MSE,
/// then one test evaluation of each method's winning cell.
ExperimentReport grid_search(const PreparedExperiment& prep);

/// prepare + grid_search.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// report.json (machine readable, deterministic key order), table.txt
/// (aligned per-method summary) and predictions.csv (per test sample:
/// truth, prediction and the 0.3 significant-error flag). Wall-time JSON
/// fields all end in "_seconds" so consumers can strip them when comparing
/// runs.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

nlohmann::json report_to_json(const ExperimentReport& report);

/// Model-directory round trip for the train/evaluate CLI verbs.
void save_method_model(const MethodModel& model, const std::filesystem::path& dir);
MethodModel load_method_model(const std::filesystem::path& dir);

/// Dataset files for the gen/evaluate CLI verbs: prefix.bin holds the
/// features stacked along a new last mode, prefix.labels.bin the labels and
/// prefix.json the window metadata.
void save_window_dataset(const WindowDataset& ds, const std::filesystem::path& prefix);
WindowDataset load_window_dataset(const std::filesystem::path& prefix);

} // namespace telm
