#include "fgatt/harness.hpp"

#include "fgatt/baselines.hpp"

#include <json.hpp>

#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>

namespace fgatt::harness {

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("train.epochs must be positive");
    if (batch_size < 1) throw ConfigError("train.batch_size must be positive");
    if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
    if (patience < 1) throw ConfigError("train.patience must be positive");
    if (!(missing_rate > 0.0 && missing_rate < 1.0)) throw ConfigError("train.missing_rate must lie in (0, 1)");
    if (stride < 1) throw ConfigError("train.stride must be positive");
    if (!(max_grad_norm >= 0.0)) throw ConfigError("train.max_grad_norm must be nonnegative");
    if (device != "cpu") throw ConfigError("train.device: only 'cpu' is supported");
}

Adam::Adam(ad::ParameterSet& params, double learning_rate, double beta1, double beta2, double eps)
    : params_(&params), lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& p : params) {
        m_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
        v_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    }
}

void Adam::step() {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    std::size_t i = 0;
    for (auto& p : *params_) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
        p.value.array() -= lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
        ++i;
    }
}

double clip_gradients(ad::ParameterSet& params, double max_norm) {
    double sq = 0.0;
    for (const auto& p : params) sq += p.grad.squaredNorm();
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double s = max_norm / norm;
        for (auto& p : params) p.grad *= s;
    }
    return norm;
}

void TrainingLog::write_jsonl(std::ostream& out) const {
    for (const auto& e : epochs) {
        nlohmann::json rec = {{"model", model},
                              {"seed", seed},
                              {"epoch", e.epoch},
                              {"train_loss", e.train_loss},
                              {"val_loss", e.val_loss},
                              {"improved", e.improved}};
        out << rec.dump() << '\n';
    }
}

PreparedData prepare(const data::TimeSeriesDataset& dataset, const data::SplitSpec& spec, std::size_t window_length) {
    dataset.validate();
    const auto parts = data::split(dataset.values, spec);
    PreparedData out;
    out.name = dataset.name;
    out.stats = data::minmax_fit(parts.train);
    out.train = data::minmax_apply(parts.train, out.stats);
    out.val = data::minmax_apply(parts.val, out.stats);
    out.test = data::minmax_apply(parts.test, out.stats);
    out.window_length = window_length;
    out.include_nodes.resize(out.stats.nodes());
    for (std::size_t n = 0; n < out.stats.nodes(); ++n) out.include_nodes[n] = !out.stats.degenerate(n);
    if (static_cast<std::size_t>(out.val.rows()) < window_length || static_cast<std::size_t>(out.test.rows()) < window_length) {
        throw InputError("validation and test slices must each hold at least one full window");
    }
    return out;
}

std::uint64_t evaluation_seed(std::uint64_t seed, double rate, std::size_t window_id) {
    const auto rate_key = static_cast<std::uint64_t>(std::llround(rate * 1000.0));
    return mix_seed(mix_seed(seed, 0xE7A1 + rate_key), window_id);
}

std::vector<MaskedWindow> evaluation_windows(const Matrix& slice, std::size_t length, std::size_t stride, double rate,
                                             std::uint64_t seed) {
    std::vector<MaskedWindow> out;
    const auto starts = data::window_starts(static_cast<std::size_t>(slice.rows()), length, stride);
    out.reserve(starts.size());
    for (std::size_t w = 0; w < starts.size(); ++w) {
        out.push_back(data::apply_missing_mask(
            slice.middleRows(static_cast<Eigen::Index>(starts[w]), static_cast<Eigen::Index>(length)), rate,
            evaluation_seed(seed, rate, w), starts[w]));
    }
    return out;
}

namespace {

bool has_missing(const MaskedWindow& w) {
    return w.missing_count() > 0;
}

// Fisher-Yates with the portable uniform helper.
void shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i-- > 1;) {
        const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i + 1));
        std::swap(v[i], v[j]);
    }
}

double validation_loss(const model::ImputationModel& model, const std::vector<MaskedWindow>& windows,
                       std::size_t batch_size) {
    const auto preds = model::predict(model, windows, batch_size);
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t w = 0; w < windows.size(); ++w) {
        for (Eigen::Index i = 0; i < preds[w].size(); ++i) {
            if (windows[w].mask.data()[i] == 0) {
                const double d = preds[w].data()[i] - windows[w].targets.data()[i];
                total += d * d;
                ++count;
            }
        }
    }
    return count == 0 ? 0.0 : total / static_cast<double>(count);
}

}  // namespace

TrainResult train(model::ModelConfig config, const PreparedData& data, const TrainConfig& tc, std::ostream* progress) {
    tc.validate();
    config.window_length = data.window_length;
    config.node_count = static_cast<std::size_t>(data.train.cols());
    config.init_seed = tc.seed;
    TrainResult result;
    result.model = model::make_model(config);
    auto& model = *result.model;
    auto& params = model.parameters();
    result.log.model = std::string(model::to_string(config.kind));
    result.log.seed = tc.seed;

    const auto train_windows = data::make_windows(data.train, data.window_length, tc.stride);
    if (train_windows.empty()) throw InputError("training slice is shorter than one window");
    std::vector<MaskedWindow> val_windows =
        evaluation_windows(data.val, data.window_length, data.window_length, tc.missing_rate, mix_seed(tc.seed, 0x5A1));
    std::erase_if(val_windows, [](const MaskedWindow& w) { return !has_missing(w); });

    Adam optimizer(params, tc.learning_rate);
    params.zero_grad();
    std::vector<std::size_t> order(train_windows.size());
    std::iota(order.begin(), order.end(), 0);

    double best = std::numeric_limits<double>::infinity();
    std::vector<Matrix> best_params = params.snapshot();
    std::size_t since_best = 0;

    for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
        std::mt19937_64 order_rng(mix_seed(tc.seed, 0x0DE5 + epoch));
        shuffle(order, order_rng);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
            const std::size_t end = std::min(order.size(), start + tc.batch_size);
            std::vector<MaskedWindow> batch;
            batch.reserve(end - start);
            for (std::size_t k = start; k < end; ++k) {
                const std::size_t w = order[k];
                MaskedWindow mw = data::apply_missing_mask(train_windows[w], tc.missing_rate,
                                                           mix_seed(mix_seed(tc.seed, epoch), w), w);
                if (has_missing(mw)) batch.push_back(std::move(mw));
            }
            if (batch.empty()) continue;
            std::mt19937_64 dropout_rng(mix_seed(mix_seed(tc.seed, 0xD0 + epoch), start));
            ad::Tape tape;
            const ad::Var pred = model.forward(tape, batch, true, dropout_rng);
            const ad::Var loss = model::batch_loss(pred, batch);
            const double lv = loss.value()(0, 0);
            if (!std::isfinite(lv)) {
                throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                                      std::to_string(batches));
            }
            tape.backward(loss);
            clip_gradients(params, tc.max_grad_norm);
            optimizer.step();
            params.zero_grad();
            if (!params.all_finite()) {
                throw DivergenceError("non-finite parameters after epoch " + std::to_string(epoch) + ", batch " +
                                      std::to_string(batches));
            }
            loss_sum += lv;
            ++batches;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = batches > 0 ? loss_sum / static_cast<double>(batches) : 0.0;
        rec.val_loss = val_windows.empty() ? rec.train_loss : validation_loss(model, val_windows, tc.batch_size);
        if (!std::isfinite(rec.val_loss)) throw DivergenceError("non-finite validation loss at epoch " + std::to_string(epoch));
        rec.improved = rec.val_loss < best;
        if (rec.improved) {
            best = rec.val_loss;
            best_params = params.snapshot();
            result.log.best_epoch = epoch;
            since_best = 0;
        } else {
            ++since_best;
        }
        result.log.epochs.push_back(rec);
        if (progress != nullptr) {
            *progress << result.log.model << " seed " << tc.seed << " epoch " << epoch << " train " << rec.train_loss
                      << " val " << rec.val_loss << (rec.improved ? " *" : "") << '\n';
        }
        if (since_best >= tc.patience) break;
    }
    params.restore(best_params);
    result.log.best_val_loss = best;
    return result;
}

Evaluation evaluate(const model::ImputationModel& model, const std::vector<MaskedWindow>& windows,
                    const std::vector<bool>& include_nodes) {
    Evaluation out;
    const auto preds = model::predict(model, windows);
    metrics::MetricAccumulator acc(include_nodes);
    out.imputed.reserve(windows.size());
    for (std::size_t w = 0; w < windows.size(); ++w) {
        out.imputed.push_back(model::impute(windows[w], preds[w]));
        acc.add(out.imputed.back(), windows[w]);
    }
    out.metrics = acc.result();
    return out;
}

Evaluation evaluate_mean_reference(const std::vector<MaskedWindow>& windows, const std::vector<bool>& include_nodes) {
    Evaluation out;
    metrics::MetricAccumulator acc(include_nodes);
    for (const auto& w : windows) {
        out.imputed.push_back(model::mean_impute_reference(w));
        acc.add(out.imputed.back(), w);
    }
    out.metrics = acc.result();
    return out;
}

void write_predictions_csv(const std::vector<MaskedWindow>& windows, const std::vector<Matrix>& imputed, std::ostream& out) {
    if (windows.size() != imputed.size()) throw InputError("prediction count does not match window count");
    out << "window,t,node,observed,target,imputed\n" << std::setprecision(17);
    for (std::size_t w = 0; w < windows.size(); ++w) {
        for (Eigen::Index t = 0; t < imputed[w].rows(); ++t) {
            for (Eigen::Index n = 0; n < imputed[w].cols(); ++n) {
                out << windows[w].window_id << ',' << t << ',' << n << ',' << int{windows[w].mask(t, n)} << ','
                    << windows[w].targets(t, n) << ',' << imputed[w](t, n) << '\n';
            }
        }
    }
}

std::vector<double> default_rates() {
    std::vector<double> r;
    for (int p = 20; p <= 80; p += 10) r.push_back(p / 100.0);
    return r;
}

SweepResult sweep(const PreparedData& data, const SweepConfig& config, std::ostream* progress) {
    if (config.rates.empty() || config.seeds.empty()) throw ConfigError("sweep needs at least one rate and one seed");
    const std::size_t stride = config.eval_stride == 0 ? data.window_length : config.eval_stride;
    SweepResult result;
    for (const std::uint64_t seed : config.seeds) {
        std::vector<std::vector<MaskedWindow>> test_sets;
        test_sets.reserve(config.rates.size());
        for (const double rate : config.rates) {
            test_sets.push_back(evaluation_windows(data.test, data.window_length, stride, rate, seed));
        }
        if (config.include_mean_reference) {
            for (std::size_t r = 0; r < config.rates.size(); ++r) {
                const auto m = evaluate_mean_reference(test_sets[r], data.include_nodes).metrics;
                result.report.add({"mean", config.rates[r], m.mse, m.mae, m.rmse, seed});
            }
        }
        for (const auto kind : config.models) {
            model::ModelConfig mc = config.model;
            mc.kind = kind;
            TrainConfig tc = config.train;
            tc.seed = seed;
            auto trained = train(mc, data, tc, progress);
            for (std::size_t r = 0; r < config.rates.size(); ++r) {
                const auto m = evaluate(*trained.model, test_sets[r], data.include_nodes).metrics;
                result.report.add({std::string(model::to_string(kind)), config.rates[r], m.mse, m.mae, m.rmse, seed});
                if (progress != nullptr) {
                    *progress << model::to_string(kind) << " seed " << seed << " rate " << config.rates[r] << " mse "
                              << m.mse << '\n';
                }
            }
            result.logs.push_back(std::move(trained.log));
        }
    }
    return result;
}

}  // namespace fgatt::harness
