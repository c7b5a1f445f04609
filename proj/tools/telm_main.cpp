// SPDX-License-Identifier: Apache-2.0
//
// Command line front end: gen, decompose, train, evaluate, gridsearch and
// bench verbs over the telm library. Exit codes: 0 on success, 2 for
// configuration/usage/IO errors, 3 for numerical failures.
#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "telm/harness.hpp"
#include "telm/tensor_io.hpp"
#include "telm/tucker.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace telm;

namespace {

struct GlobalOpts {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::string out;
    std::string window_mode;
};

ExperimentConfig config_with_overrides(const std::string& config_path, const GlobalOpts& g) {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    if (g.seed) cfg.seed = *g.seed;
    if (g.workers) cfg.workers = *g.workers;
    if (!g.window_mode.empty())
        cfg.window_mode = g.window_mode == "pilot" ? WindowMode::Pilot : WindowMode::Consecutive;
    return cfg;
}

fs::path require_out(const GlobalOpts& g, const char* verb) {
    if (g.out.empty())
        throw std::invalid_argument(std::string(verb) + ": --out <dir> is required");
    return fs::path(g.out);
}

void write_json_file(const json& j, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << j.dump(2) << "\n";
}

double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run_gen(const std::string& config_path, const GlobalOpts& g) {
    const ExperimentConfig cfg = config_with_overrides(config_path, g);
    const fs::path out = require_out(g, "gen");
    fs::create_directories(out);

    const ChannelGrid raw = generate_channel(cfg.channel, derive_seed(cfg.seed, 0));
    save_complex_tensor({raw.tx, raw.rx, raw.freq}, raw.values, out / "grid.bin");
    write_json_file(config_to_json(cfg), out / "config.json");

    // The split datasets models actually consume (normalized planes).
    const PreparedExperiment prep = prepare(cfg);
    const fs::path data = out / "datasets";
    fs::create_directories(data);
    const char* plane_names[2] = {"real", "imag"};
    for (std::size_t plane = 0; plane < 2; ++plane) {
        save_window_dataset(prep.fit[plane], data / ("fit_" + std::string(plane_names[plane])));
        save_window_dataset(prep.validation[plane],
                            data / ("validation_" + std::string(plane_names[plane])));
        save_window_dataset(prep.test[plane], data / ("test_" + std::string(plane_names[plane])));
    }
    write_json_file(json{{"real_mean", prep.norm.real_mean},
                         {"real_std", prep.norm.real_std},
                         {"imag_mean", prep.norm.imag_mean},
                         {"imag_std", prep.norm.imag_std}},
                    data / "normalization.json");

    std::cout << "wrote grid " << shape_to_string({raw.tx, raw.rx, raw.freq}) << ", "
              << prep.fit[0].features.size() << "/" << prep.validation[0].features.size() << "/"
              << prep.test[0].features.size() << " fit/validation/test samples to " << out.string()
              << "\n";
    return 0;
}

int run_decompose(const std::string& in_path, const std::vector<std::size_t>& ranks,
                  std::size_t hooi_iters, double fit_tol, const GlobalOpts& g) {
    if (in_path.empty()) throw std::invalid_argument("decompose: --in <tensor file> is required");
    if (ranks.empty()) throw std::invalid_argument("decompose: --ranks is required");
    const fs::path out = require_out(g, "decompose");

    const Tensor x = load_tensor(in_path);
    TuckerFactors t;
    HooiTrace trace;
    const bool use_hooi = hooi_iters > 0;
    if (use_hooi) {
        t = hooi(x, ranks, hooi_iters, fit_tol, &trace);
    } else {
        t = hosvd(x, ranks);
    }
    const double achieved = fit(x, t);

    fs::create_directories(out);
    save_tensor(t.core, out / "core.bin");
    for (std::size_t k = 0; k < t.factors.size(); ++k)
        save_tensor(Tensor::from_matrix(t.factors[k]),
                    out / ("factor_" + std::to_string(k) + ".bin"));
    json j{{"shape", x.shape()}, {"ranks", ranks}, {"fit", achieved},
           {"method", use_hooi ? "hooi" : "hosvd"}};
    if (use_hooi) {
        j["hosvd_fit"] = trace.hosvd_fit;
        j["iteration_fits"] = trace.iteration_fits;
    }
    write_json_file(j, out / "decompose.json");

    std::cout << (use_hooi ? "hooi" : "hosvd") << " fit " << achieved << " at ranks "
              << shape_to_string(ranks) << " for shape " << shape_to_string(x.shape()) << "\n";
    return 0;
}

int run_train(const std::string& config_path, const std::string& method_str,
              std::size_t hidden_override, const std::vector<std::size_t>& ranks_override,
              const GlobalOpts& g) {
    const ExperimentConfig cfg = config_with_overrides(config_path, g);
    const fs::path out = require_out(g, "train");
    const Method method = parse_method(method_str);

    std::size_t hidden = hidden_override;
    Shape ranks(ranks_override.begin(), ranks_override.end());
    const bool needs_hidden = method != Method::Mean && method != Method::Lmse;
    const bool needs_ranks = method == Method::Tdelm || method == Method::TdNn;
    if (needs_hidden && hidden == 0) {
        if (cfg.hidden_sizes.empty())
            throw std::invalid_argument("train: no hidden size given and hidden_sizes is empty");
        hidden = cfg.hidden_sizes.front();
    }
    if (needs_ranks && ranks.empty()) {
        if (cfg.rank_grid.empty())
            throw std::invalid_argument("train: no ranks given and rank_grid is empty");
        ranks = cfg.rank_grid.front();
    }
    if (!needs_ranks) ranks.clear();

    const PreparedExperiment prep = prepare(cfg);
    const std::size_t reps = !needs_hidden ? 1
                             : (method == Method::Nn || method == Method::TdNn) ? cfg.nn_repeats
                                                                                : cfg.repeats;
    // Stream tag 4 keeps the train verb independent of grid search (tag 3).
    const std::uint64_t cell_seed =
        derive_seed(cfg.seed, 4, static_cast<std::uint64_t>(method));
    const SelectBestResult r = select_best(prep, method, hidden, ranks, reps, cell_seed);

    save_method_model(r.model, out);
    const double train_mse_value = evaluate_mse(r.model, prep.fit);
    json stats = json::array();
    for (const RepeatStats& s : r.repeat_stats)
        stats.push_back(json{{"repeat", s.repeat},
                             {"validation_mse", s.validation_mse},
                             {"train_seconds", s.train_seconds}});
    write_json_file(json{{"method", method_name(method)},
                         {"hidden", hidden},
                         {"ranks", ranks},
                         {"repeats", reps},
                         {"best_repeat", r.best_repeat},
                         {"validation_mse", r.validation_mse},
                         {"train_mse", train_mse_value},
                         {"decompose_seconds", r.decompose_seconds},
                         {"repeat_stats", std::move(stats)}},
                    out / "train_report.json");

    std::cout << "trained " << method_name(method);
    if (needs_hidden) std::cout << " (L=" << hidden << ")";
    if (needs_ranks) std::cout << " at ranks " << shape_to_string(ranks);
    std::cout << ": validation MSE " << r.validation_mse << ", best repeat " << r.best_repeat
              << "\n";
    return 0;
}

int run_evaluate(const std::string& model_dir, const std::string& data_dir,
                 const std::string& split, const GlobalOpts& g) {
    if (model_dir.empty()) throw std::invalid_argument("evaluate: --model <dir> is required");
    if (data_dir.empty()) throw std::invalid_argument("evaluate: --data <dir> is required");

    const MethodModel model = load_method_model(model_dir);
    // Accept either the dataset directory itself or the gen output
    // directory that nests it under datasets/.
    fs::path base(data_dir);
    if (!fs::exists(base / (split + "_real.json")) &&
        fs::exists(base / "datasets" / (split + "_real.json")))
        base /= "datasets";
    const std::array<WindowDataset, 2> planes = {
        load_window_dataset(base / (split + "_real")),
        load_window_dataset(base / (split + "_imag")),
    };
    const double real_mse = mse(method_predict(model, kRealPlane, planes[0]), planes[0].labels);
    const double imag_mse = mse(method_predict(model, kImagPlane, planes[1]), planes[1].labels);

    json j{{"method", method_name(model.method)}, {"split", split},
           {"samples", planes[0].labels.size()},  {"real_mse", real_mse},
           {"imag_mse", imag_mse},                {"mse", real_mse + imag_mse}};
    if (!g.out.empty()) {
        fs::create_directories(g.out);
        write_json_file(j, fs::path(g.out) / "evaluate.json");
    }
    std::cout << method_name(model.method) << " on " << split << ": MSE "
              << (real_mse + imag_mse) << " (real " << real_mse << ", imag " << imag_mse
              << ") over " << planes[0].labels.size() << " samples\n";
    return 0;
}

int run_gridsearch(const std::string& config_path, const GlobalOpts& g) {
    const ExperimentConfig cfg = config_with_overrides(config_path, g);
    const fs::path out = require_out(g, "gridsearch");

    const ExperimentReport report = run_experiment(cfg);
    write_report(report, out);

    for (const MethodReport& m : report.methods) {
        std::cout << method_name(m.method) << ": test MSE " << m.test_mse << " (hidden "
                  << m.hidden;
        if (!m.ranks.empty()) std::cout << ", ranks " << shape_to_string(m.ranks);
        std::cout << ", " << m.mults << " mults)\n";
    }
    std::cout << "report written to " << out.string() << "\n";
    return 0;
}

int run_bench(std::size_t samples, std::size_t hidden, const std::vector<std::size_t>& shape_arg,
              const std::vector<std::size_t>& ranks_arg, std::size_t trials, const GlobalOpts& g) {
    if (trials == 0) throw std::invalid_argument("bench: --trials must be >= 1");
    const Shape shape = shape_arg.empty() ? Shape{64, 3, 4} : Shape(shape_arg.begin(), shape_arg.end());
    const Shape ranks = ranks_arg.empty() ? Shape{64, 2, 2} : Shape(ranks_arg.begin(), ranks_arg.end());
    const std::uint64_t seed = g.seed.value_or(0);

    auto random_batch = [&](const Shape& s, std::uint64_t tag) {
        Rng rng(derive_seed(seed, tag));
        std::vector<Tensor> batch;
        batch.reserve(samples);
        for (std::size_t i = 0; i < samples; ++i) {
            std::vector<double> v(shape_product(s));
            for (double& x : v) x = rng.uniform(-1.0, 1.0);
            batch.emplace_back(s, std::move(v));
        }
        return batch;
    };
    const std::vector<Tensor> direct = random_batch(shape, 0);
    const std::vector<Tensor> cores = random_batch(ranks, 1);
    Rng layer_rng(derive_seed(seed, 2));
    Rng core_layer_rng(derive_seed(seed, 3));
    const HiddenLayer direct_layer = draw_hidden_layer(hidden, shape, layer_rng);
    const HiddenLayer core_layer = draw_hidden_layer(hidden, ranks, core_layer_rng);

    auto time_batch = [&](const std::vector<Tensor>& batch, const HiddenLayer& layer) {
        std::vector<double> times;
        std::uint64_t mults = 0;
        for (std::size_t t = 0; t < trials; ++t) {
            auto t0 = std::chrono::steady_clock::now();
            HiddenMatrix h = hidden_matrix(batch, layer);
            times.push_back(elapsed(t0));
            mults = h.mults;
        }
        std::sort(times.begin(), times.end());
        const double median = times.size() % 2 ? times[times.size() / 2]
                                               : 0.5 * (times[times.size() / 2 - 1] +
                                                        times[times.size() / 2]);
        return std::pair<double, std::uint64_t>(median, mults);
    };

    const auto [telm_s, telm_mults] = time_batch(direct, direct_layer);
    const auto [tdelm_s, tdelm_mults] = time_batch(cores, core_layer);

    json j{{"samples", samples},
           {"hidden", hidden},
           {"shape", shape},
           {"ranks", ranks},
           {"trials", trials},
           {"telm", json{{"mults", telm_mults}, {"hidden_matrix_seconds", telm_s}}},
           {"tdelm", json{{"mults", tdelm_mults}, {"hidden_matrix_seconds", tdelm_s}}}};
    if (!g.out.empty()) {
        fs::create_directories(g.out);
        write_json_file(j, fs::path(g.out) / "bench.json");
    }
    std::cout << "telm:  " << telm_mults << " mults, " << telm_s << " s median of " << trials
              << "\n";
    std::cout << "tdelm: " << tdelm_mults << " mults, " << tdelm_s << " s median of " << trials
              << "\n";
    std::cout << "mult ratio " << static_cast<double>(tdelm_mults) / static_cast<double>(telm_mults)
              << ", time ratio " << tdelm_s / telm_s << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tensor ELM toolkit for MIMO-OFDM channel interpolation"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "override the config seed");
    app.add_option("--workers", g.workers, "override the config worker count");
    app.add_option("--out", g.out, "output directory");
    app.add_option("--window-mode", g.window_mode, "pilot window layout")
        ->check(CLI::IsMember({"pilot", "consecutive"}));

    std::string config_path;
    std::string in_path;
    std::vector<std::size_t> ranks;
    std::size_t hooi_iters = 0;
    double fit_tol = 1e-6;
    std::string method_str;
    std::size_t hidden = 0;
    std::string model_dir;
    std::string data_dir;
    std::string split = "test";
    std::size_t bench_samples = 4104;
    std::size_t bench_hidden = 1080;
    std::vector<std::size_t> bench_shape;
    std::size_t trials = 3;

    CLI::App* gen = app.add_subcommand("gen", "generate a channel grid and its datasets");
    gen->add_option("--config", config_path, "experiment config JSON");
    gen->fallthrough();

    CLI::App* decompose = app.add_subcommand("decompose", "Tucker-decompose a tensor file");
    decompose->add_option("--in", in_path, "input tensor file")->required();
    decompose->add_option("--ranks", ranks, "target ranks, e.g. 64,2,2")
        ->required()
        ->delimiter(',');
    decompose->add_option("--hooi-iters", hooi_iters, "HOOI sweeps (0 = plain HOSVD)");
    decompose->add_option("--fit-tol", fit_tol, "HOOI fit improvement stop threshold");
    decompose->fallthrough();

    CLI::App* train = app.add_subcommand("train", "train one method and save the model");
    train->add_option("--config", config_path, "experiment config JSON");
    train->add_option("--method", method_str, "tdelm|telm|elm|tdnn|nn|mean|lmse")->required();
    train->add_option("--hidden", hidden, "hidden units (default: first config entry)");
    train->add_option("--ranks", ranks, "Tucker ranks (default: first config entry)")
        ->delimiter(',');
    train->fallthrough();

    CLI::App* evaluate = app.add_subcommand("evaluate", "evaluate a saved model on a dataset");
    evaluate->add_option("--model", model_dir, "model directory")->required();
    evaluate->add_option("--data", data_dir, "dataset directory from gen")->required();
    evaluate->add_option("--split", split, "dataset split prefix (default test)");
    evaluate->fallthrough();

    CLI::App* gridsearch = app.add_subcommand("gridsearch", "full experiment with model selection");
    gridsearch->add_option("--config", config_path, "experiment config JSON");
    gridsearch->fallthrough();

    CLI::App* bench = app.add_subcommand("bench", "hidden-matrix cost comparison");
    bench->add_option("--samples", bench_samples, "batch size");
    bench->add_option("--hidden", bench_hidden, "hidden units");
    bench->add_option("--shape", bench_shape, "sample shape, e.g. 64,3,4")->delimiter(',');
    bench->add_option("--ranks", ranks, "core shape, e.g. 64,2,2")->delimiter(',');
    bench->add_option("--trials", trials, "timing repetitions");
    bench->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return run_gen(config_path, g);
        if (decompose->parsed()) return run_decompose(in_path, ranks, hooi_iters, fit_tol, g);
        if (train->parsed()) return run_train(config_path, method_str, hidden, ranks, g);
        if (evaluate->parsed()) return run_evaluate(model_dir, data_dir, split, g);
        if (gridsearch->parsed()) return run_gridsearch(config_path, g);
        if (bench->parsed()) return run_bench(bench_samples, bench_hidden, bench_shape, ranks, trials, g);
        std::cerr << "no verb given\n";
        return 2;
    } catch (const numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
