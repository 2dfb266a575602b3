#pragma once
// Trained model plus the normalization needed to use it, stored as one JSON file.

#include "fgatt/data_pipeline.hpp"
#include "fgatt/imputation_model.hpp"

#include <memory>
#include <string>

namespace fgatt::checkpoint {

inline constexpr const char* kFormat = "fgatt-checkpoint/1";

struct Checkpoint {
    std::unique_ptr<model::ImputationModel> model;
    data::NormalizationStats stats;
    std::string dataset_name;
    data::SplitSpec split;
    std::uint64_t seed = 0;
};

void save(const std::string& path, const model::ImputationModel& model, const data::NormalizationStats& stats,
          const std::string& dataset_name, const data::SplitSpec& split, std::uint64_t seed);

/// Rebuilds the model from its stored config and overwrites every parameter.
/// Throws InputError on a wrong format tag, unknown or missing parameters, or shape mismatches.
Checkpoint load(const std::string& path);

}  // namespace fgatt::checkpoint
