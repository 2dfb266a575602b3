#pragma once
// Run configuration: JSON document validated against a published schema,
// then mapped onto the module config structs.

#include "fgatt/data_pipeline.hpp"
#include "fgatt/harness.hpp"
#include "fgatt/imputation_model.hpp"

#include <json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace fgatt::config {

struct DatasetSource {
    std::string path;  // CSV path; empty when synthetic
    std::string name;
    bool synthetic = false;
    std::size_t nodes = 12;
    std::size_t samples = 4000;
    std::uint64_t seed = 7;
    data::SynthConfig synth;
};

struct RunConfig {
    DatasetSource dataset;
    std::size_t window = 16;
    data::SplitSpec split;
    std::size_t eval_stride = 0;  // 0 = window (non-overlapping)
    model::ModelConfig model;
    harness::TrainConfig train;
    std::vector<model::ModelKind> sweep_models{model::ModelKind::fgatt, model::ModelKind::ffn, model::ModelKind::bgru,
                                               model::ModelKind::transformer};
    std::vector<double> sweep_rates = harness::default_rates();
    std::vector<std::uint64_t> sweep_seeds{0, 1, 2};
    bool mean_reference = true;
    std::uint64_t seed = 0;
    std::string output_dir;
};

/// The JSON Schema (draft-07 subset) every config file must satisfy.
std::string_view schema_text();

/// Checks `instance` against `schema`; throws ConfigError naming the offending field path.
/// Supports type, properties, additionalProperties=false, required, enum, minimum, maximum,
/// exclusiveMinimum, exclusiveMaximum, minItems and items.
void validate_against_schema(const nlohmann::json& instance, const nlohmann::json& schema, const std::string& path = "$");

/// Schema validation followed by semantic checks; missing fields keep their defaults.
RunConfig parse(const nlohmann::json& document);
RunConfig load(const std::string& path);
nlohmann::json to_json(const RunConfig& config);

/// Stable short hash of the canonical JSON form.
std::string hash(const RunConfig& config);

/// Sweep settings exactly as `fgatt sweep` would run them for this configuration.
harness::SweepConfig sweep_config(const RunConfig& config);

nlohmann::json model_to_json(const model::ModelConfig& config);
model::ModelConfig model_from_json(const nlohmann::json& j);

/// Load or generate the configured dataset.
data::TimeSeriesDataset load_dataset(const DatasetSource& source);

}  // namespace fgatt::config
