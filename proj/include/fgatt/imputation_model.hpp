#pragma once
// End-to-end imputation models sharing one input/output convention.
//
// Input: a batch of MaskedWindows (T x N each). Every (t, n) entry is embedded
// from the pair (zero-filled value, mask bit). Output: one prediction per entry,
// stacked as a (B * T * N) x 1 column in [window][time][node] order.

#include "fgatt/autodiff.hpp"
#include "fgatt/fgat_layer.hpp"
#include "fgatt/graph_builder.hpp"
#include "fgatt/temporal_encoder.hpp"
#include "fgatt/window.hpp"

#include <memory>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace fgatt::model {

enum class ModelKind { fgatt, ffn, bgru, transformer };

ModelKind parse_model_kind(std::string_view name);
std::string_view to_string(ModelKind kind) noexcept;

struct ModelConfig {
    ModelKind kind = ModelKind::fgatt;
    std::size_t window_length = 16;
    std::size_t node_count = 0;
    Eigen::Index d_model = 64;
    std::size_t fgat_blocks = 2;
    temporal::EncoderConfig encoder;  // encoder.d_model is kept equal to d_model
    graph::GraphConfig graph;
    double dropout_rate = 0.1;
    double leaky_slope = 0.01;
    double eps = 1e-5;
    Eigen::Index ffn_hidden = 256;
    Eigen::Index gru_hidden = 64;
    std::uint64_t init_seed = 0;

    /// Copies shared sizes into the encoder config and validates everything.
    void finalize();
};

class ImputationModel {
public:
    explicit ImputationModel(ModelConfig config);
    virtual ~ImputationModel() = default;
    ImputationModel(const ImputationModel&) = delete;
    ImputationModel& operator=(const ImputationModel&) = delete;

    /// (B * T * N) x 1 predictions in [window][time][node] order.
    virtual ad::Var forward(ad::Tape& tape, std::span<const MaskedWindow> batch, bool training,
                            std::mt19937_64& rng) const = 0;

    const ModelConfig& config() const noexcept { return config_; }
    ad::ParameterSet& parameters() noexcept { return params_; }
    const ad::ParameterSet& parameters() const noexcept { return params_; }

protected:
    /// (B * T * N) x 2 matrix of (value, mask) pairs.
    ad::Var input_pairs(ad::Tape& tape, std::span<const MaskedWindow> batch) const;
    void check_batch(std::span<const MaskedWindow> batch) const;

    ModelConfig config_;
    ad::ParameterSet params_;
};

/// Row order [b][t][n] -> [b][n][t] (and back with `inverse`).
std::vector<std::size_t> node_major_order(std::size_t windows, std::size_t steps, std::size_t nodes, bool inverse = false);

/// Fuzzy graph attention followed by a Transformer encoder.
class FgattModel final : public ImputationModel {
public:
    explicit FgattModel(ModelConfig config);

    ad::Var forward(ad::Tape& tape, std::span<const MaskedWindow> batch, bool training,
                    std::mt19937_64& rng) const override;

    /// Attention matrices of the most recent forward through `probe` (tests only).
    ad::Var forward_probed(ad::Tape& tape, std::span<const MaskedWindow> batch, bool training, std::mt19937_64& rng,
                           temporal::AttentionProbe* probe) const;

    const std::vector<fgat::FgatBlock>& blocks() const noexcept { return blocks_; }

private:
    nn::Linear embed_;
    std::vector<fgat::FgatBlock> blocks_;
    temporal::TemporalEncoder encoder_;
    nn::Linear head_;
};

std::unique_ptr<ImputationModel> make_model(ModelConfig config);

/// One T x N prediction for a single window.
Matrix forward(const ImputationModel& model, const MaskedWindow& window, bool training = false, std::uint64_t seed = 0);

/// Inference for many windows, batched.
std::vector<Matrix> predict(const ImputationModel& model, std::span<const MaskedWindow> windows,
                            std::size_t batch_size = 32);

/// Mean squared error over the missing entries of one window.
double masked_mse_loss(const Matrix& pred, const MaskedWindow& window);

/// Tape loss for a batch: mean over every missing entry in the batch.
ad::Var batch_loss(ad::Var pred, std::span<const MaskedWindow> batch);

/// Observed entries copied; missing entries from `pred` clamped to [0, 1].
Matrix impute(const MaskedWindow& window, const Matrix& pred);
Matrix impute(const MaskedWindow& window, const ImputationModel& model);

}  // namespace fgatt::model
