// fgatt: command-line driver for synthetic data generation, graph export,
// training, evaluation, and missing-rate sweeps.

#include "fgatt/checkpoint.hpp"
#include "fgatt/config.hpp"
#include "fgatt/graph_builder.hpp"
#include "fgatt/harness.hpp"
#include "fgatt/plot.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace fgatt;

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool quiet = false;
};

struct DataFlags {
    std::string csv;
    bool synthetic = false;
};

void add_common(CLI::App& cmd, CommonFlags& f) {
    cmd.add_option("--config", f.config_path, "JSON run configuration (see `fgatt schema`)")->check(CLI::ExistingFile);
    cmd.add_option("--seed", f.seed, "Seed override");
    cmd.add_option("--out", f.out,
                   "Output directory. Without it, outputs go to <output_dir>/<command>-<config hash>-<UTC timestamp>");
    cmd.add_flag("--quiet", f.quiet, "Suppress progress output on stderr");
}

void add_data(CLI::App& cmd, DataFlags& f) {
    auto* csv = cmd.add_option("--data", f.csv, "Input CSV (timestamp column then one column per node)")
                    ->check(CLI::ExistingFile);
    cmd.add_flag("--synthetic", f.synthetic, "Use the synthetic dataset described by the config")->excludes(csv);
}

config::RunConfig base_config(const CommonFlags& f) {
    return f.config_path.empty() ? config::parse(nlohmann::json::object()) : config::load(f.config_path);
}

void apply_data(config::RunConfig& rc, const DataFlags& f) {
    if (!f.csv.empty()) {
        rc.dataset.path = f.csv;
        rc.dataset.synthetic = false;
    }
    if (f.synthetic) {
        rc.dataset.synthetic = true;
        rc.dataset.path.clear();
    }
}

void apply_seed(config::RunConfig& rc, const CommonFlags& f) {
    if (f.seed) {
        rc.seed = *f.seed;
        rc.train.seed = *f.seed;
    }
}

std::string utc_stamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
    return buf;
}

fs::path output_dir(const CommonFlags& f, const config::RunConfig& rc, const std::string& command) {
    fs::path dir;
    if (!f.out.empty()) {
        dir = f.out;
    } else {
        const fs::path base = rc.output_dir.empty() ? fs::path("runs") : fs::path(rc.output_dir);
        dir = base / (command + "-" + config::hash(rc) + "-" + utc_stamp());
    }
    fs::create_directories(dir);
    return dir;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    return out;
}

void write_config(const fs::path& dir, const config::RunConfig& rc) {
    auto out = open_out(dir / "config.json");
    out << config::to_json(rc).dump(2) << '\n';
}

void close_checked(std::ofstream& out, const fs::path& path) {
    out.close();
    if (!out) throw InputError("failed writing " + path.string());
}

std::string slug(std::string s) {
    for (char& c : s) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
    }
    return s.empty() ? std::string("dataset") : s;
}

std::ostream* progress_stream(const CommonFlags& f) {
    return f.quiet ? nullptr : &std::cerr;
}

// ---------------------------------------------------------------- synth

struct SynthFlags {
    CommonFlags common;
    std::optional<std::size_t> nodes, samples;
};

void cmd_synth(const SynthFlags& f) {
    auto rc = base_config(f.common);
    rc.dataset.synthetic = true;
    if (f.nodes) rc.dataset.nodes = *f.nodes;
    if (f.samples) rc.dataset.samples = *f.samples;
    if (f.common.seed) rc.dataset.seed = *f.common.seed;
    const auto synth = data::synth_generate(rc.dataset.nodes, rc.dataset.samples, rc.dataset.seed, rc.dataset.synth);
    const auto dir = output_dir(f.common, rc, "synth");
    {
        const auto path = dir / "dataset.csv";
        auto out = open_out(path);
        data::write_csv(synth.dataset, out);
        close_checked(out, path);
    }
    {
        const auto path = dir / "latent_edges.csv";
        auto out = open_out(path);
        data::write_edges_csv(synth.latent_edges, out);
        close_checked(out, path);
    }
    write_config(dir, rc);
    std::cout << dir.string() << '\n';
}

// ---------------------------------------------------------------- graph

struct GraphFlags {
    CommonFlags common;
    DataFlags data;
    std::string split = "test";
    std::size_t window_index = 0;
    double missing_rate = 0.0;
    std::optional<double> alpha, sigma;
    std::optional<std::size_t> k;
    std::optional<std::string> pooling;
    bool global_top_k = false;
};

void cmd_graph(const GraphFlags& f) {
    auto rc = base_config(f.common);
    apply_data(rc, f.data);
    apply_seed(rc, f.common);
    auto& g = rc.model.graph;
    if (f.alpha) g.alpha = *f.alpha;
    if (f.sigma) g.sigma = *f.sigma;
    if (f.k) g.k = *f.k;
    if (f.pooling) g.pooling = graph::parse_pooling(*f.pooling);
    if (f.global_top_k) g.global_top_k = true;
    g.validate();

    const auto prepared = harness::prepare(config::load_dataset(rc.dataset), rc.split, rc.window);
    const Matrix& slice = f.split == "train" ? prepared.train : f.split == "val" ? prepared.val : prepared.test;
    const auto windows = data::make_windows(slice, rc.window, rc.window);
    if (f.window_index >= windows.size()) {
        throw InputError("--window-index " + std::to_string(f.window_index) + " out of range: the " + f.split +
                         " slice has " + std::to_string(windows.size()) + " windows");
    }
    const Matrix& targets = windows[f.window_index];
    const MaskedWindow window =
        f.missing_rate > 0.0
            ? data::apply_missing_mask(targets, f.missing_rate, harness::evaluation_seed(rc.seed, f.missing_rate, f.window_index),
                                       f.window_index)
            : make_masked_window(targets, Mask::Ones(targets.rows(), targets.cols()), f.window_index);
    const auto built = graph::construct_window_graph(window, g);

    const auto dir = output_dir(f.common, rc, "graph");
    const auto path = dir / "edges.csv";
    auto out = open_out(path);
    graph::write_edge_list_csv(built, out);
    close_checked(out, path);
    write_config(dir, rc);
    std::cout << dir.string() << '\n';
}

// ---------------------------------------------------------------- train

struct TrainFlags {
    CommonFlags common;
    DataFlags data;
    std::optional<std::string> model;
    std::optional<std::size_t> epochs;
    std::optional<double> missing_rate;
};

void cmd_train(const TrainFlags& f) {
    auto rc = base_config(f.common);
    apply_data(rc, f.data);
    apply_seed(rc, f.common);
    if (f.model) rc.model.kind = model::parse_model_kind(*f.model);
    if (f.epochs) rc.train.epochs = *f.epochs;
    if (f.missing_rate) rc.train.missing_rate = *f.missing_rate;
    rc.train.validate();

    const auto dataset = config::load_dataset(rc.dataset);
    const auto prepared = harness::prepare(dataset, rc.split, rc.window);
    const auto dir = output_dir(f.common, rc, "train");
    auto result = harness::train(rc.model, prepared, rc.train, progress_stream(f.common));
    checkpoint::save((dir / "checkpoint.json").string(), *result.model, prepared.stats, dataset.name, rc.split, rc.seed);
    {
        const auto path = dir / "training_log.jsonl";
        auto out = open_out(path);
        result.log.write_jsonl(out);
        close_checked(out, path);
    }
    write_config(dir, rc);
    std::cout << dir.string() << '\n';
}

// ---------------------------------------------------------------- evaluate

struct EvaluateFlags {
    CommonFlags common;
    DataFlags data;
    std::string checkpoint;
    std::vector<double> rates;
    std::vector<std::uint64_t> seeds;
    bool predictions = false;
    bool mean_reference = false;
};

void cmd_evaluate(const EvaluateFlags& f) {
    auto rc = base_config(f.common);
    apply_data(rc, f.data);
    apply_seed(rc, f.common);
    if (!f.rates.empty()) rc.sweep_rates = f.rates;
    if (!f.seeds.empty()) rc.sweep_seeds = f.seeds;
    if (f.common.seed && f.seeds.empty()) rc.sweep_seeds = {*f.common.seed};

    const auto ck = checkpoint::load(f.checkpoint);
    const auto dataset = config::load_dataset(rc.dataset);
    dataset.validate();
    if (static_cast<std::size_t>(dataset.values.cols()) != ck.model->config().node_count) {
        throw InputError("dataset has " + std::to_string(dataset.values.cols()) + " nodes but the checkpoint expects " +
                         std::to_string(ck.model->config().node_count));
    }
    // Normalize with the statistics stored at training time.
    const auto parts = data::split(dataset.values, ck.split);
    const Matrix test = data::minmax_apply(parts.test, ck.stats);
    std::vector<bool> include(ck.stats.nodes());
    for (std::size_t n = 0; n < include.size(); ++n) include[n] = !ck.stats.degenerate(n);
    const std::size_t length = ck.model->config().window_length;
    const std::size_t stride = rc.eval_stride == 0 ? length : rc.eval_stride;
    const std::string name(model::to_string(ck.model->config().kind));

    const auto dir = output_dir(f.common, rc, "evaluate");
    metrics::MetricsReport report;
    for (const auto seed : rc.sweep_seeds) {
        for (const double rate : rc.sweep_rates) {
            const auto windows = harness::evaluation_windows(test, length, stride, rate, seed);
            const auto ev = harness::evaluate(*ck.model, windows, include);
            report.add({name, rate, ev.metrics.mse, ev.metrics.mae, ev.metrics.rmse, seed});
            if (f.mean_reference) {
                const auto m = harness::evaluate_mean_reference(windows, include).metrics;
                report.add({"mean", rate, m.mse, m.mae, m.rmse, seed});
            }
            if (f.predictions) {
                char file[64];
                std::snprintf(file, sizeof file, "predictions_rate%02d_seed%llu.csv",
                              static_cast<int>(std::lround(rate * 100.0)), static_cast<unsigned long long>(seed));
                auto out = open_out(dir / file);
                harness::write_predictions_csv(windows, ev.imputed, out);
                close_checked(out, dir / file);
            }
        }
    }
    const auto path = dir / "metrics.csv";
    auto out = open_out(path);
    report.write_csv(out);
    close_checked(out, path);
    write_config(dir, rc);
    std::cout << dir.string() << '\n';
}

// ---------------------------------------------------------------- sweep

struct SweepFlags {
    CommonFlags common;
    DataFlags data;
    std::vector<std::string> models;
    std::vector<double> rates;
    std::vector<std::uint64_t> seeds;
    std::optional<std::size_t> epochs;
    bool no_mean = false;
};

void cmd_sweep(const SweepFlags& f) {
    auto rc = base_config(f.common);
    apply_data(rc, f.data);
    apply_seed(rc, f.common);
    if (!f.models.empty()) {
        rc.sweep_models.clear();
        for (const auto& m : f.models) rc.sweep_models.push_back(model::parse_model_kind(m));
    }
    if (!f.rates.empty()) rc.sweep_rates = f.rates;
    if (!f.seeds.empty()) rc.sweep_seeds = f.seeds;
    if (f.epochs) rc.train.epochs = *f.epochs;
    if (f.no_mean) rc.mean_reference = false;

    const auto dataset = config::load_dataset(rc.dataset);
    const auto prepared = harness::prepare(dataset, rc.split, rc.window);
    const harness::SweepConfig sc = config::sweep_config(rc);

    const auto dir = output_dir(f.common, rc, "sweep");
    const auto result = harness::sweep(prepared, sc, progress_stream(f.common));
    {
        const auto path = dir / "metrics.csv";
        auto out = open_out(path);
        result.report.write_csv(out);
        close_checked(out, path);
    }
    for (const char* metric : {"mse", "mae", "rmse"}) {
        const auto path = dir / (slug(dataset.name) + "_" + metric + ".svg");
        auto out = open_out(path);
        std::string upper(metric);
        for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        plot::write_metric_svg(result.report, metric, upper + " vs missing rate (" + dataset.name + ")", out);
        close_checked(out, path);
    }
    {
        const auto path = dir / "training_log.jsonl";
        auto out = open_out(path);
        for (const auto& log : result.logs) log.write_jsonl(out);
        close_checked(out, path);
    }
    write_config(dir, rc);
    std::cout << dir.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FGATT: fuzzy-rough graph attention + Transformer imputation for multivariate sensor series"};
    app.require_subcommand(1);

    SynthFlags synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic correlated dataset and its latent graph");
    add_common(*synth_cmd, synth.common);
    synth_cmd->add_option("--nodes", synth.nodes, "Number of nodes")->check(CLI::Range(2, 100000));
    synth_cmd->add_option("--samples", synth.samples, "Number of timesteps")->check(CLI::PositiveNumber);

    GraphFlags graph_flags;
    auto* graph_cmd = app.add_subcommand("graph", "Export the fuzzy-rough graph of one window as an edge list");
    add_common(*graph_cmd, graph_flags.common);
    add_data(*graph_cmd, graph_flags.data);
    graph_cmd->add_option("--split", graph_flags.split, "Slice to take the window from")
        ->check(CLI::IsMember({"train", "val", "test"}));
    graph_cmd->add_option("--window-index", graph_flags.window_index, "Index of the non-overlapping window in the slice");
    graph_cmd->add_option("--missing-rate", graph_flags.missing_rate, "Mask the window before building (0 = fully observed)")
        ->check(CLI::Range(0.0, 0.999999));
    graph_cmd->add_option("--alpha", graph_flags.alpha, "Direction weight in [0, 1]");
    graph_cmd->add_option("--sigma", graph_flags.sigma, "Gaussian kernel bandwidth");
    graph_cmd->add_option("--k", graph_flags.k, "Neighbors per node");
    graph_cmd->add_option("--pooling", graph_flags.pooling, "Temporal pooling")->check(CLI::IsMember({"mean", "max"}));
    graph_cmd->add_flag("--global-top-k", graph_flags.global_top_k, "Keep the K best edges overall instead of per node");

    TrainFlags train_flags;
    auto* train_cmd = app.add_subcommand("train", "Train one model and write a checkpoint and training log");
    add_common(*train_cmd, train_flags.common);
    add_data(*train_cmd, train_flags.data);
    train_cmd->add_option("--model", train_flags.model, "Model kind")
        ->check(CLI::IsMember({"fgatt", "ffn", "bgru", "transformer"}));
    train_cmd->add_option("--epochs", train_flags.epochs, "Maximum epochs")->check(CLI::PositiveNumber);
    train_cmd->add_option("--missing-rate", train_flags.missing_rate, "Training missing rate in (0, 1)")
        ->check(CLI::Range(1e-9, 1.0 - 1e-9));

    EvaluateFlags eval_flags;
    auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint on the test slice");
    add_common(*eval_cmd, eval_flags.common);
    add_data(*eval_cmd, eval_flags.data);
    eval_cmd->add_option("--checkpoint", eval_flags.checkpoint, "Checkpoint written by `train`")
        ->required()
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--rates", eval_flags.rates, "Missing rates (default: config sweep rates)");
    eval_cmd->add_option("--seeds", eval_flags.seeds, "Mask seeds (default: --seed, else config sweep seeds)");
    eval_cmd->add_flag("--predictions", eval_flags.predictions, "Also dump completed windows per (rate, seed)");
    eval_cmd->add_flag("--mean-reference", eval_flags.mean_reference, "Add rows for the per-node mean reference");

    SweepFlags sweep_flags;
    auto* sweep_cmd = app.add_subcommand("sweep", "Train every model per seed and evaluate across missing rates");
    add_common(*sweep_cmd, sweep_flags.common);
    add_data(*sweep_cmd, sweep_flags.data);
    sweep_cmd->add_option("--models", sweep_flags.models, "Models to compare")
        ->check(CLI::IsMember({"fgatt", "ffn", "bgru", "transformer"}));
    sweep_cmd->add_option("--rates", sweep_flags.rates, "Test missing rates");
    sweep_cmd->add_option("--seeds", sweep_flags.seeds, "Training and mask seeds");
    sweep_cmd->add_option("--epochs", sweep_flags.epochs, "Maximum epochs")->check(CLI::PositiveNumber);
    sweep_cmd->add_flag("--no-mean-reference", sweep_flags.no_mean, "Omit the mean-impute reference rows");

    auto* schema_cmd = app.add_subcommand("schema", "Print the JSON schema for --config files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Help and version requests exit 0; every other usage error shares the config-error code.
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*synth_cmd) cmd_synth(synth);
        else if (*graph_cmd) cmd_graph(graph_flags);
        else if (*train_cmd) cmd_train(train_flags);
        else if (*eval_cmd) cmd_evaluate(eval_flags);
        else if (*sweep_cmd) cmd_sweep(sweep_flags);
        else if (*schema_cmd) std::cout << config::schema_text();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 3;
    } catch (const DivergenceError& e) {
        std::cerr << "training diverged: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
