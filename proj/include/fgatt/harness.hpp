#pragma once
// Training loop, evaluation, and the missing-rate sweep.

#include "fgatt/autodiff.hpp"
#include "fgatt/data_pipeline.hpp"
#include "fgatt/imputation_model.hpp"
#include "fgatt/metrics.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace fgatt::harness {

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    std::size_t patience = 10;
    std::uint64_t seed = 0;
    double missing_rate = 0.5;
    std::size_t stride = 1;
    double max_grad_norm = 5.0;  // 0 disables clipping
    std::string device = "cpu";

    void validate() const;
};

/// Adaptive moment estimation with bias correction.
class Adam {
public:
    Adam(ad::ParameterSet& params, double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    void step();
    std::size_t steps() const noexcept { return t_; }

private:
    ad::ParameterSet* params_;
    double lr_, beta1_, beta2_, eps_;
    std::vector<Matrix> m_, v_;
    std::size_t t_ = 0;
};

/// Scales all gradients so their joint L2 norm is at most `max_norm`. Returns the norm before scaling.
double clip_gradients(ad::ParameterSet& params, double max_norm);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    bool improved = false;
};

struct TrainingLog {
    std::string model;
    std::uint64_t seed = 0;
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_val_loss = 0.0;

    /// One JSON object per epoch.
    void write_jsonl(std::ostream& out) const;
};

/// Normalized splits ready for windowing. Stats are fitted on the training slice only.
struct PreparedData {
    std::string name;
    data::NormalizationStats stats;
    Matrix train, val, test;
    std::vector<bool> include_nodes;  // false for degenerate sensors
    std::size_t window_length = 16;
};

PreparedData prepare(const data::TimeSeriesDataset& dataset, const data::SplitSpec& spec, std::size_t window_length);

struct TrainResult {
    std::unique_ptr<model::ImputationModel> model;
    TrainingLog log;
};

/// Minimise the masked loss with fresh masks each epoch; keeps the best-validation parameters.
TrainResult train(model::ModelConfig config, const PreparedData& data, const TrainConfig& train_config,
                  std::ostream* progress = nullptr);

/// Non-overlapping windows of `slice` with a fixed mask per (seed, rate, window).
std::vector<MaskedWindow> evaluation_windows(const Matrix& slice, std::size_t length, std::size_t stride, double rate,
                                             std::uint64_t seed);

/// Mask seed shared by every model evaluated at the same (seed, rate).
std::uint64_t evaluation_seed(std::uint64_t seed, double rate, std::size_t window_id);

struct Evaluation {
    metrics::ErrorMetrics metrics;
    std::vector<Matrix> imputed;  // one completed T x N window per input window
};

Evaluation evaluate(const model::ImputationModel& model, const std::vector<MaskedWindow>& windows,
                    const std::vector<bool>& include_nodes);
Evaluation evaluate_mean_reference(const std::vector<MaskedWindow>& windows, const std::vector<bool>& include_nodes);

/// Completed windows as CSV: window,t,node,observed,target,imputed.
void write_predictions_csv(const std::vector<MaskedWindow>& windows, const std::vector<Matrix>& imputed, std::ostream& out);

std::vector<double> default_rates();

struct SweepConfig {
    std::vector<model::ModelKind> models{model::ModelKind::fgatt, model::ModelKind::ffn, model::ModelKind::bgru,
                                         model::ModelKind::transformer};
    std::vector<double> rates = default_rates();
    std::vector<std::uint64_t> seeds{0, 1, 2};
    bool include_mean_reference = true;
    std::size_t eval_stride = 0;  // 0 = window length
    model::ModelConfig model;     // kind is overridden per entry of `models`
    TrainConfig train;            // seed is overridden per entry of `seeds`
};

struct SweepResult {
    metrics::MetricsReport report;
    std::vector<TrainingLog> logs;
};

/// Every (model, rate) cell evaluated exactly once per seed. The mean-impute
/// reference, when enabled, is reported under the model name "mean".
SweepResult sweep(const PreparedData& data, const SweepConfig& config, std::ostream* progress = nullptr);

}  // namespace fgatt::harness
