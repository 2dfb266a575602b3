#include "fgatt/imputation_model.hpp"

#include "fgatt/baselines.hpp"

#include <algorithm>
#include <string>

namespace fgatt::model {

ModelKind parse_model_kind(std::string_view name) {
    if (name == "fgatt") return ModelKind::fgatt;
    if (name == "ffn") return ModelKind::ffn;
    if (name == "bgru") return ModelKind::bgru;
    if (name == "transformer") return ModelKind::transformer;
    throw ConfigError("unknown model kind '" + std::string(name) + "' (expected fgatt, ffn, bgru or transformer)");
}

std::string_view to_string(ModelKind kind) noexcept {
    switch (kind) {
        case ModelKind::fgatt: return "fgatt";
        case ModelKind::ffn: return "ffn";
        case ModelKind::bgru: return "bgru";
        case ModelKind::transformer: return "transformer";
    }
    return "unknown";
}

void ModelConfig::finalize() {
    if (window_length < 1) throw ConfigError("model.window_length must be positive");
    if (node_count < 2) throw ConfigError("model.node_count must be >= 2");
    if (d_model < 1) throw ConfigError("model.d_model must be positive");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("model.dropout must lie in [0, 1)");
    if (!(leaky_slope > 0.0)) throw ConfigError("model.leaky_slope must be positive");
    if (ffn_hidden < 1 || gru_hidden < 1) throw ConfigError("hidden sizes must be positive");
    encoder.d_model = d_model;
    encoder.dropout_rate = dropout_rate;
    encoder.eps = eps;
    encoder.max_len = std::max<Eigen::Index>(encoder.max_len, static_cast<Eigen::Index>(window_length));
    encoder.validate();
    graph.validate();
}

ImputationModel::ImputationModel(ModelConfig config) : config_(std::move(config)) {
    config_.finalize();
}

void ImputationModel::check_batch(std::span<const MaskedWindow> batch) const {
    if (batch.empty()) throw InputError("empty batch");
    for (const auto& w : batch) {
        if (w.length() != config_.window_length || w.node_count() != config_.node_count) {
            throw InputError("window shape " + std::to_string(w.length()) + "x" + std::to_string(w.node_count()) +
                             " does not match the model's " + std::to_string(config_.window_length) + "x" +
                             std::to_string(config_.node_count));
        }
    }
}

ad::Var ImputationModel::input_pairs(ad::Tape& tape, std::span<const MaskedWindow> batch) const {
    check_batch(batch);
    const auto cells = static_cast<Eigen::Index>(config_.window_length * config_.node_count);
    Matrix x(static_cast<Eigen::Index>(batch.size()) * cells, 2);
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto base = static_cast<Eigen::Index>(b) * cells;
        for (Eigen::Index c = 0; c < cells; ++c) {
            x(base + c, 0) = batch[b].values.data()[c];
            x(base + c, 1) = batch[b].mask.data()[c] != 0 ? 1.0 : 0.0;
        }
    }
    return tape.constant(std::move(x));
}

std::vector<std::size_t> node_major_order(std::size_t windows, std::size_t steps, std::size_t nodes, bool inverse) {
    std::vector<std::size_t> order(windows * steps * nodes);
    for (std::size_t b = 0; b < windows; ++b) {
        for (std::size_t t = 0; t < steps; ++t) {
            for (std::size_t n = 0; n < nodes; ++n) {
                const std::size_t time_major = (b * steps + t) * nodes + n;
                const std::size_t node_major = (b * nodes + n) * steps + t;
                if (inverse) {
                    order[time_major] = node_major;
                } else {
                    order[node_major] = time_major;
                }
            }
        }
    }
    return order;
}

FgattModel::FgattModel(ModelConfig config) : ImputationModel(std::move(config)) {
    std::mt19937_64 rng(mix_seed(config_.init_seed, 0xF6A77));
    embed_ = nn::Linear(params_, "embed", 2, config_.d_model, rng);
    for (std::size_t s = 0; s < config_.fgat_blocks; ++s) {
        blocks_.emplace_back(params_, "fgat" + std::to_string(s), config_.d_model, config_.dropout_rate, config_.leaky_slope,
                             config_.eps, rng);
    }
    encoder_ = temporal::TemporalEncoder(params_, "encoder", config_.encoder, rng);
    head_ = nn::Linear(params_, "head", config_.d_model, 1, rng);
}

ad::Var FgattModel::forward(ad::Tape& tape, std::span<const MaskedWindow> batch, bool training,
                            std::mt19937_64& rng) const {
    return forward_probed(tape, batch, training, rng, nullptr);
}

ad::Var FgattModel::forward_probed(ad::Tape& tape, std::span<const MaskedWindow> batch, bool training,
                                   std::mt19937_64& rng, temporal::AttentionProbe* probe) const {
    ad::Var h = embed_(tape, input_pairs(tape, batch));
    const std::size_t steps = config_.window_length;
    const std::size_t nodes = config_.node_count;

    if (!blocks_.empty()) {
        std::vector<graph::DynamicGraph> graphs(batch.size());
        const auto count = static_cast<std::ptrdiff_t>(batch.size());
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t b = 0; b < count; ++b) {
            graphs[static_cast<std::size_t>(b)] = graph::construct_window_graph(batch[static_cast<std::size_t>(b)], config_.graph);
        }
        std::vector<const graph::DynamicGraph*> per_group;
        per_group.reserve(batch.size() * steps);
        for (const auto& g : graphs) {
            for (std::size_t t = 0; t < steps; ++t) per_group.push_back(&g);
        }
        const fgat::NeighborIndex index = fgat::make_neighbor_index(per_group);
        for (const auto& block : blocks_) {
            h = block(tape, h, index, training, rng);
        }
    }

    h = ad::gather_rows(h, node_major_order(batch.size(), steps, nodes));
    h = temporal::add_positional_encoding(h, static_cast<Eigen::Index>(steps));
    h = encoder_(tape, h, static_cast<Eigen::Index>(steps), training, rng, probe);
    ad::Var out = head_(tape, h);
    return ad::gather_rows(out, node_major_order(batch.size(), steps, nodes, true));
}

std::unique_ptr<ImputationModel> make_model(ModelConfig config) {
    switch (config.kind) {
        case ModelKind::fgatt: return std::make_unique<FgattModel>(std::move(config));
        case ModelKind::ffn: return std::make_unique<FfnModel>(std::move(config));
        case ModelKind::bgru: return std::make_unique<BgruModel>(std::move(config));
        case ModelKind::transformer: return std::make_unique<TransformerModel>(std::move(config));
    }
    throw ConfigError("unknown model kind");
}

namespace {

Matrix unstack(const Matrix& column, std::size_t b, std::size_t steps, std::size_t nodes) {
    const auto cells = static_cast<Eigen::Index>(steps * nodes);
    Matrix out(static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(nodes));
    std::copy_n(column.data() + static_cast<Eigen::Index>(b) * cells, cells, out.data());
    return out;
}

}  // namespace

Matrix forward(const ImputationModel& model, const MaskedWindow& window, bool training, std::uint64_t seed) {
    ad::Tape tape;
    std::mt19937_64 rng(seed);
    const ad::Var out = model.forward(tape, std::span<const MaskedWindow>(&window, 1), training, rng);
    return unstack(out.value(), 0, window.length(), window.node_count());
}

std::vector<Matrix> predict(const ImputationModel& model, std::span<const MaskedWindow> windows, std::size_t batch_size) {
    if (batch_size < 1) throw ConfigError("batch size must be positive");
    std::vector<Matrix> out;
    out.reserve(windows.size());
    std::mt19937_64 rng(0);
    for (std::size_t start = 0; start < windows.size(); start += batch_size) {
        const auto batch = windows.subspan(start, std::min(batch_size, windows.size() - start));
        ad::Tape tape;
        const ad::Var pred = model.forward(tape, batch, false, rng);
        for (std::size_t b = 0; b < batch.size(); ++b) {
            out.push_back(unstack(pred.value(), b, batch[b].length(), batch[b].node_count()));
        }
    }
    return out;
}

double masked_mse_loss(const Matrix& pred, const MaskedWindow& window) {
    if (pred.rows() != window.targets.rows() || pred.cols() != window.targets.cols()) {
        throw InputError("prediction shape does not match the window");
    }
    double total = 0.0;
    std::size_t count = 0;
    for (Eigen::Index t = 0; t < pred.rows(); ++t) {
        for (Eigen::Index n = 0; n < pred.cols(); ++n) {
            if (window.mask(t, n) == 0) {
                const double diff = pred(t, n) - window.targets(t, n);
                total += diff * diff;
                ++count;
            }
        }
    }
    if (count == 0) throw InputError("masked loss needs at least one missing entry");
    return total / static_cast<double>(count);
}

ad::Var batch_loss(ad::Var pred, std::span<const MaskedWindow> batch) {
    Matrix target(pred.rows(), 1);
    Matrix weight(pred.rows(), 1);
    Eigen::Index at = 0;
    for (const auto& w : batch) {
        for (Eigen::Index c = 0; c < w.targets.size(); ++c, ++at) {
            if (at >= pred.rows()) throw InputError("prediction column is shorter than the batch");
            target(at, 0) = w.targets.data()[c];
            weight(at, 0) = w.mask.data()[c] == 0 ? 1.0 : 0.0;
        }
    }
    if (at != pred.rows()) throw InputError("prediction column does not match the batch");
    return ad::masked_mse(pred, target, weight);
}

Matrix impute(const MaskedWindow& window, const Matrix& pred) {
    if (pred.rows() != window.values.rows() || pred.cols() != window.values.cols()) {
        throw InputError("prediction shape does not match the window");
    }
    Matrix out = window.values;
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        if (window.mask.data()[i] == 0) {
            out.data()[i] = std::clamp(pred.data()[i], 0.0, 1.0);
        }
    }
    return out;
}

Matrix impute(const MaskedWindow& window, const ImputationModel& model) {
    return impute(window, forward(model, window));
}

}  // namespace fgatt::model
