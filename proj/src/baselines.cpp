#include "fgatt/baselines.hpp"

namespace fgatt::model {

FfnModel::FfnModel(ModelConfig config) : ImputationModel(std::move(config)) {
    std::mt19937_64 rng(mix_seed(config_.init_seed, 0xFF11));
    const auto cells = static_cast<Eigen::Index>(config_.window_length * config_.node_count);
    hidden1_ = nn::Linear(params_, "ffn.hidden1", 2 * cells, config_.ffn_hidden, rng);
    hidden2_ = nn::Linear(params_, "ffn.hidden2", config_.ffn_hidden, config_.ffn_hidden, rng);
    out_ = nn::Linear(params_, "ffn.out", config_.ffn_hidden, cells, rng);
}

ad::Var FfnModel::forward(ad::Tape& tape, std::span<const MaskedWindow> batch, bool training,
                          std::mt19937_64& rng) const {
    const auto cells = static_cast<Eigen::Index>(config_.window_length * config_.node_count);
    const auto b = static_cast<Eigen::Index>(batch.size());
    ad::Var x = ad::reshape(input_pairs(tape, batch), b, 2 * cells);
    ad::Var h = ad::dropout(ad::relu(hidden1_(tape, x)), config_.dropout_rate, training, rng);
    h = ad::dropout(ad::relu(hidden2_(tape, h)), config_.dropout_rate, training, rng);
    return ad::reshape(out_(tape, h), b * cells, 1);
}

BgruModel::BgruModel(ModelConfig config) : ImputationModel(std::move(config)) {
    std::mt19937_64 rng(mix_seed(config_.init_seed, 0xB6A0));
    const Eigen::Index hidden = config_.gru_hidden;
    forward_dir_ = {nn::Linear(params_, "bgru.fwd.input", 2, 3 * hidden, rng),
                    nn::Linear(params_, "bgru.fwd.recurrent", hidden, 3 * hidden, rng, false)};
    backward_dir_ = {nn::Linear(params_, "bgru.bwd.input", 2, 3 * hidden, rng),
                     nn::Linear(params_, "bgru.bwd.recurrent", hidden, 3 * hidden, rng, false)};
    head_ = nn::Linear(params_, "bgru.head", 2 * hidden, 1, rng);
}

ad::Var BgruModel::run(ad::Tape& tape, const Direction& dir, const std::vector<ad::Var>& steps, bool reverse,
                       std::vector<ad::Var>& states) const {
    const Eigen::Index hidden = config_.gru_hidden;
    ad::Var h = tape.constant(Matrix::Zero(steps.front().rows(), hidden));
    states.assign(steps.size(), h);
    for (std::size_t k = 0; k < steps.size(); ++k) {
        const std::size_t t = reverse ? steps.size() - 1 - k : k;
        ad::Var gx = dir.input(tape, steps[t]);
        ad::Var gh = dir.recurrent(tape, h);
        ad::Var update = ad::sigmoid(ad::add(ad::slice_cols(gx, 0, hidden), ad::slice_cols(gh, 0, hidden)));
        ad::Var reset = ad::sigmoid(ad::add(ad::slice_cols(gx, hidden, hidden), ad::slice_cols(gh, hidden, hidden)));
        ad::Var candidate = ad::tanh(
            ad::add(ad::slice_cols(gx, 2 * hidden, hidden), ad::hadamard(reset, ad::slice_cols(gh, 2 * hidden, hidden))));
        h = ad::add(ad::hadamard(ad::one_minus(update), candidate), ad::hadamard(update, h));
        states[t] = h;
    }
    return h;
}

ad::Var BgruModel::forward(ad::Tape& tape, std::span<const MaskedWindow> batch, bool training,
                           std::mt19937_64& rng) const {
    const std::size_t steps = config_.window_length;
    const std::size_t nodes = config_.node_count;
    ad::Var x = input_pairs(tape, batch);

    // Per-time slices with rows ordered [window][node].
    std::vector<ad::Var> per_step;
    per_step.reserve(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        std::vector<std::size_t> rows;
        rows.reserve(batch.size() * nodes);
        for (std::size_t b = 0; b < batch.size(); ++b) {
            for (std::size_t n = 0; n < nodes; ++n) rows.push_back((b * steps + t) * nodes + n);
        }
        per_step.push_back(ad::gather_rows(x, std::move(rows)));
    }

    std::vector<ad::Var> fwd, bwd;
    run(tape, forward_dir_, per_step, false, fwd);
    run(tape, backward_dir_, per_step, true, bwd);

    std::vector<ad::Var> outputs;
    outputs.reserve(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        ad::Var both = ad::dropout(ad::concat_cols(fwd[t], bwd[t]), config_.dropout_rate, training, rng);
        outputs.push_back(head_(tape, both));
    }
    // Stacked order is [time][window][node]; restore [window][time][node].
    ad::Var stacked = ad::concat_rows(outputs);
    std::vector<std::size_t> order(batch.size() * steps * nodes);
    for (std::size_t b = 0; b < batch.size(); ++b) {
        for (std::size_t t = 0; t < steps; ++t) {
            for (std::size_t n = 0; n < nodes; ++n) {
                order[(b * steps + t) * nodes + n] = (t * batch.size() + b) * nodes + n;
            }
        }
    }
    return ad::gather_rows(stacked, std::move(order));
}

TransformerModel::TransformerModel(ModelConfig config) : ImputationModel(std::move(config)) {
    std::mt19937_64 rng(mix_seed(config_.init_seed, 0x7EA5));
    embed_ = nn::Linear(params_, "embed", 2, config_.d_model, rng);
    encoder_ = temporal::TemporalEncoder(params_, "encoder", config_.encoder, rng);
    head_ = nn::Linear(params_, "head", config_.d_model, 1, rng);
}

ad::Var TransformerModel::forward(ad::Tape& tape, std::span<const MaskedWindow> batch, bool training,
                                  std::mt19937_64& rng) const {
    const std::size_t steps = config_.window_length;
    const std::size_t nodes = config_.node_count;
    ad::Var h = embed_(tape, input_pairs(tape, batch));
    h = ad::gather_rows(h, node_major_order(batch.size(), steps, nodes));
    h = temporal::add_positional_encoding(h, static_cast<Eigen::Index>(steps));
    h = encoder_(tape, h, static_cast<Eigen::Index>(steps), training, rng);
    return ad::gather_rows(head_(tape, h), node_major_order(batch.size(), steps, nodes, true));
}

Matrix mean_impute_reference(const MaskedWindow& window) {
    Matrix out(window.values.rows(), window.values.cols());
    for (Eigen::Index n = 0; n < out.cols(); ++n) {
        double total = 0.0;
        int count = 0;
        for (Eigen::Index t = 0; t < out.rows(); ++t) {
            if (window.mask(t, n) != 0) {
                total += window.values(t, n);
                ++count;
            }
        }
        const double fill = count > 0 ? total / count : 0.5;
        for (Eigen::Index t = 0; t < out.rows(); ++t) {
            out(t, n) = window.mask(t, n) != 0 ? window.values(t, n) : fill;
        }
    }
    return out;
}

}  // namespace fgatt::model
