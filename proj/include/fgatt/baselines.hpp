#pragma once
// Reference models compared against FGATT. All follow the ImputationModel
// input/output convention so the harness treats them identically.

#include "fgatt/imputation_model.hpp"

namespace fgatt::model {

/// Whole window flattened into one vector, two hidden ReLU layers, one output per entry.
class FfnModel final : public ImputationModel {
public:
    explicit FfnModel(ModelConfig config);
    ad::Var forward(ad::Tape& tape, std::span<const MaskedWindow> batch, bool training,
                    std::mt19937_64& rng) const override;

private:
    nn::Linear hidden1_, hidden2_, out_;
};

/// Bidirectional GRU over each node's sequence, weights shared across nodes.
class BgruModel final : public ImputationModel {
public:
    explicit BgruModel(ModelConfig config);
    ad::Var forward(ad::Tape& tape, std::span<const MaskedWindow> batch, bool training,
                    std::mt19937_64& rng) const override;

private:
    struct Direction {
        nn::Linear input;      // 2 -> 3H  (update | reset | candidate)
        nn::Linear recurrent;  // H -> 3H
    };
    ad::Var run(ad::Tape& tape, const Direction& dir, const std::vector<ad::Var>& steps, bool reverse,
                std::vector<ad::Var>& states) const;

    Direction forward_dir_, backward_dir_;
    nn::Linear head_;
};

/// The FGATT pipeline with the spatial stack removed.
class TransformerModel final : public ImputationModel {
public:
    explicit TransformerModel(ModelConfig config);
    ad::Var forward(ad::Tape& tape, std::span<const MaskedWindow> batch, bool training,
                    std::mt19937_64& rng) const override;

private:
    nn::Linear embed_;
    temporal::TemporalEncoder encoder_;
    nn::Linear head_;
};

/// Floor reference: each missing entry gets its node's observed mean within the
/// window, or 0.5 when the node has no observation there.
Matrix mean_impute_reference(const MaskedWindow& window);

}  // namespace fgatt::model
