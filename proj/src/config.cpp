#include "fgatt/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace fgatt::config {

namespace {

constexpr std::string_view kSchema = R"json({
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "fgatt run configuration",
  "type": "object",
  "additionalProperties": false,
  "properties": {
    "dataset": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "path": {"type": "string"},
        "name": {"type": "string"},
        "synthetic": {
          "type": "object",
          "additionalProperties": false,
          "properties": {
            "nodes": {"type": "integer", "minimum": 2},
            "samples": {"type": "integer", "minimum": 1},
            "seed": {"type": "integer", "minimum": 0},
            "sinusoids": {"type": "integer", "minimum": 0},
            "min_period": {"type": "number", "exclusiveMinimum": 0},
            "max_period": {"type": "number", "exclusiveMinimum": 0},
            "group_size": {"type": "integer", "minimum": 2},
            "coupling": {"type": "number", "minimum": 0},
            "ar_phi": {"type": "number", "exclusiveMinimum": -1, "exclusiveMaximum": 1},
            "noise_std": {"type": "number", "minimum": 0}
          }
        }
      }
    },
    "data": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "window": {"type": "integer", "minimum": 1},
        "train_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "val_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "test_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "eval_stride": {"type": "integer", "minimum": 0}
      }
    },
    "model": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "kind": {"enum": ["fgatt", "ffn", "bgru", "transformer"]},
        "d_model": {"type": "integer", "minimum": 1},
        "fgat_blocks": {"type": "integer", "minimum": 0},
        "heads": {"type": "integer", "minimum": 1},
        "d_ff": {"type": "integer", "minimum": 1},
        "layers": {"type": "integer", "minimum": 1},
        "dropout": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "leaky_slope": {"type": "number", "exclusiveMinimum": 0},
        "eps": {"type": "number", "exclusiveMinimum": 0},
        "ffn_hidden": {"type": "integer", "minimum": 1},
        "gru_hidden": {"type": "integer", "minimum": 1}
      }
    },
    "graph": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "alpha": {"type": "number", "minimum": 0, "maximum": 1},
        "sigma": {"type": "number", "exclusiveMinimum": 0},
        "k": {"type": "integer", "minimum": 1},
        "pooling": {"enum": ["mean", "max"]},
        "global_top_k": {"type": "boolean"}
      }
    },
    "train": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "epochs": {"type": "integer", "minimum": 1},
        "batch_size": {"type": "integer", "minimum": 1},
        "learning_rate": {"type": "number", "exclusiveMinimum": 0},
        "patience": {"type": "integer", "minimum": 1},
        "missing_rate": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "stride": {"type": "integer", "minimum": 1},
        "max_grad_norm": {"type": "number", "minimum": 0},
        "device": {"enum": ["cpu"]}
      }
    },
    "sweep": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "models": {"type": "array", "minItems": 1, "items": {"enum": ["fgatt", "ffn", "bgru", "transformer"]}},
        "rates": {"type": "array", "minItems": 1,
                  "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
        "seeds": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 0}},
        "mean_reference": {"type": "boolean"}
      }
    },
    "seed": {"type": "integer", "minimum": 0},
    "output_dir": {"type": "string"}
  }
}
)json";

bool type_matches(const nlohmann::json& v, const std::string& type) {
    if (type == "object") return v.is_object();
    if (type == "array") return v.is_array();
    if (type == "string") return v.is_string();
    if (type == "boolean") return v.is_boolean();
    if (type == "integer") return v.is_number_integer() || (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>());
    if (type == "number") return v.is_number();
    if (type == "null") return v.is_null();
    return false;
}

[[noreturn]] void fail(const std::string& path, const std::string& message) {
    throw ConfigError(path + ": " + message);
}

template <typename T>
void read(const nlohmann::json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

std::string_view schema_text() {
    return kSchema;
}

void validate_against_schema(const nlohmann::json& instance, const nlohmann::json& schema, const std::string& path) {
    if (schema.contains("type") && !type_matches(instance, schema["type"].get<std::string>())) {
        fail(path, "expected " + schema["type"].get<std::string>() + ", got " + std::string(instance.type_name()));
    }
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& e : schema["enum"]) found = found || e == instance;
        if (!found) fail(path, "value " + instance.dump() + " is not one of " + schema["enum"].dump());
    }
    if (instance.is_number()) {
        const double v = instance.get<double>();
        if (schema.contains("minimum") && v < schema["minimum"].get<double>()) {
            fail(path, "must be >= " + schema["minimum"].dump());
        }
        if (schema.contains("maximum") && v > schema["maximum"].get<double>()) {
            fail(path, "must be <= " + schema["maximum"].dump());
        }
        if (schema.contains("exclusiveMinimum") && v <= schema["exclusiveMinimum"].get<double>()) {
            fail(path, "must be > " + schema["exclusiveMinimum"].dump());
        }
        if (schema.contains("exclusiveMaximum") && v >= schema["exclusiveMaximum"].get<double>()) {
            fail(path, "must be < " + schema["exclusiveMaximum"].dump());
        }
    }
    if (instance.is_object()) {
        const auto props = schema.value("properties", nlohmann::json::object());
        if (schema.contains("required")) {
            for (const auto& key : schema["required"]) {
                if (!instance.contains(key.get<std::string>())) fail(path, "missing required field '" + key.get<std::string>() + "'");
            }
        }
        for (const auto& [key, value] : instance.items()) {
            const std::string child = path + "." + key;
            if (props.contains(key)) {
                validate_against_schema(value, props[key], child);
            } else if (schema.contains("additionalProperties") && schema["additionalProperties"] == false) {
                fail(child, "unknown field");
            }
        }
    }
    if (instance.is_array()) {
        if (schema.contains("minItems") && instance.size() < schema["minItems"].get<std::size_t>()) {
            fail(path, "needs at least " + schema["minItems"].dump() + " items");
        }
        if (schema.contains("items")) {
            for (std::size_t i = 0; i < instance.size(); ++i) {
                validate_against_schema(instance[i], schema["items"], path + "[" + std::to_string(i) + "]");
            }
        }
    }
}

nlohmann::json model_to_json(const model::ModelConfig& c) {
    return {{"kind", std::string(model::to_string(c.kind))},
            {"window_length", c.window_length},
            {"node_count", c.node_count},
            {"d_model", c.d_model},
            {"fgat_blocks", c.fgat_blocks},
            {"heads", c.encoder.heads},
            {"d_ff", c.encoder.d_ff},
            {"layers", c.encoder.layers},
            {"max_len", c.encoder.max_len},
            {"dropout", c.dropout_rate},
            {"leaky_slope", c.leaky_slope},
            {"eps", c.eps},
            {"ffn_hidden", c.ffn_hidden},
            {"gru_hidden", c.gru_hidden},
            {"init_seed", c.init_seed},
            {"graph",
             {{"alpha", c.graph.alpha},
              {"sigma", c.graph.sigma},
              {"k", c.graph.k},
              {"pooling", std::string(graph::to_string(c.graph.pooling))},
              {"global_top_k", c.graph.global_top_k}}}};
}

model::ModelConfig model_from_json(const nlohmann::json& j) {
    model::ModelConfig c;
    c.kind = model::parse_model_kind(j.at("kind").get<std::string>());
    read(j, "window_length", c.window_length);
    read(j, "node_count", c.node_count);
    read(j, "d_model", c.d_model);
    read(j, "fgat_blocks", c.fgat_blocks);
    read(j, "heads", c.encoder.heads);
    read(j, "d_ff", c.encoder.d_ff);
    read(j, "layers", c.encoder.layers);
    read(j, "max_len", c.encoder.max_len);
    read(j, "dropout", c.dropout_rate);
    read(j, "leaky_slope", c.leaky_slope);
    read(j, "eps", c.eps);
    read(j, "ffn_hidden", c.ffn_hidden);
    read(j, "gru_hidden", c.gru_hidden);
    read(j, "init_seed", c.init_seed);
    if (j.contains("graph")) {
        const auto& g = j["graph"];
        read(g, "alpha", c.graph.alpha);
        read(g, "sigma", c.graph.sigma);
        read(g, "k", c.graph.k);
        read(g, "global_top_k", c.graph.global_top_k);
        if (g.contains("pooling")) c.graph.pooling = graph::parse_pooling(g["pooling"].get<std::string>());
    }
    return c;
}

RunConfig parse(const nlohmann::json& document) {
    validate_against_schema(document, nlohmann::json::parse(kSchema));
    RunConfig c;
    // d_ff defaults to 4 * d_model when the file does not set it.
    bool d_ff_set = false;
    if (document.contains("dataset")) {
        const auto& d = document["dataset"];
        read(d, "path", c.dataset.path);
        read(d, "name", c.dataset.name);
        if (d.contains("synthetic")) {
            const auto& s = d["synthetic"];
            c.dataset.synthetic = true;
            read(s, "nodes", c.dataset.nodes);
            read(s, "samples", c.dataset.samples);
            read(s, "seed", c.dataset.seed);
            read(s, "sinusoids", c.dataset.synth.sinusoids);
            read(s, "min_period", c.dataset.synth.min_period);
            read(s, "max_period", c.dataset.synth.max_period);
            read(s, "group_size", c.dataset.synth.group_size);
            read(s, "coupling", c.dataset.synth.coupling);
            read(s, "ar_phi", c.dataset.synth.ar_phi);
            read(s, "noise_std", c.dataset.synth.noise_std);
        }
        if (c.dataset.synthetic && !c.dataset.path.empty()) {
            fail("$.dataset", "set either 'path' or 'synthetic', not both");
        }
    }
    if (document.contains("data")) {
        const auto& d = document["data"];
        read(d, "window", c.window);
        read(d, "train_fraction", c.split.train);
        read(d, "val_fraction", c.split.val);
        read(d, "test_fraction", c.split.test);
        read(d, "eval_stride", c.eval_stride);
        if (std::abs(c.split.train + c.split.val + c.split.test - 1.0) > 1e-9) {
            fail("$.data", "train_fraction + val_fraction + test_fraction must equal 1");
        }
    }
    if (document.contains("model")) {
        const auto& m = document["model"];
        if (m.contains("kind")) c.model.kind = model::parse_model_kind(m["kind"].get<std::string>());
        read(m, "d_model", c.model.d_model);
        read(m, "fgat_blocks", c.model.fgat_blocks);
        read(m, "heads", c.model.encoder.heads);
        d_ff_set = m.contains("d_ff");
        read(m, "d_ff", c.model.encoder.d_ff);
        read(m, "layers", c.model.encoder.layers);
        read(m, "dropout", c.model.dropout_rate);
        read(m, "leaky_slope", c.model.leaky_slope);
        read(m, "eps", c.model.eps);
        read(m, "ffn_hidden", c.model.ffn_hidden);
        read(m, "gru_hidden", c.model.gru_hidden);
        if (c.model.d_model % c.model.encoder.heads != 0) fail("$.model.heads", "must divide d_model");
    }
    if (!d_ff_set) c.model.encoder.d_ff = 4 * c.model.d_model;
    if (document.contains("graph")) {
        const auto& g = document["graph"];
        read(g, "alpha", c.model.graph.alpha);
        read(g, "sigma", c.model.graph.sigma);
        read(g, "k", c.model.graph.k);
        read(g, "global_top_k", c.model.graph.global_top_k);
        if (g.contains("pooling")) c.model.graph.pooling = graph::parse_pooling(g["pooling"].get<std::string>());
    }
    if (document.contains("train")) {
        const auto& t = document["train"];
        read(t, "epochs", c.train.epochs);
        read(t, "batch_size", c.train.batch_size);
        read(t, "learning_rate", c.train.learning_rate);
        read(t, "patience", c.train.patience);
        read(t, "missing_rate", c.train.missing_rate);
        read(t, "stride", c.train.stride);
        read(t, "max_grad_norm", c.train.max_grad_norm);
        read(t, "device", c.train.device);
    }
    if (document.contains("sweep")) {
        const auto& s = document["sweep"];
        if (s.contains("models")) {
            c.sweep_models.clear();
            for (const auto& m : s["models"]) c.sweep_models.push_back(model::parse_model_kind(m.get<std::string>()));
        }
        read(s, "rates", c.sweep_rates);
        read(s, "seeds", c.sweep_seeds);
        read(s, "mean_reference", c.mean_reference);
    }
    read(document, "seed", c.seed);
    read(document, "output_dir", c.output_dir);
    c.train.seed = c.seed;
    c.model.window_length = c.window;
    return c;
}

RunConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": invalid JSON: " + e.what());
    }
    return parse(doc);
}

nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json dataset = nlohmann::json::object();
    if (c.dataset.synthetic) {
        dataset["synthetic"] = {{"nodes", c.dataset.nodes},
                                {"samples", c.dataset.samples},
                                {"seed", c.dataset.seed},
                                {"sinusoids", c.dataset.synth.sinusoids},
                                {"min_period", c.dataset.synth.min_period},
                                {"max_period", c.dataset.synth.max_period},
                                {"group_size", c.dataset.synth.group_size},
                                {"coupling", c.dataset.synth.coupling},
                                {"ar_phi", c.dataset.synth.ar_phi},
                                {"noise_std", c.dataset.synth.noise_std}};
    } else {
        dataset["path"] = c.dataset.path;
    }
    if (!c.dataset.name.empty()) dataset["name"] = c.dataset.name;
    nlohmann::json models = nlohmann::json::array();
    for (auto k : c.sweep_models) models.push_back(std::string(model::to_string(k)));
    nlohmann::json out = {
        {"dataset", dataset},
        {"data",
         {{"window", c.window},
          {"train_fraction", c.split.train},
          {"val_fraction", c.split.val},
          {"test_fraction", c.split.test},
          {"eval_stride", c.eval_stride}}},
        {"model",
         {{"kind", std::string(model::to_string(c.model.kind))},
          {"d_model", c.model.d_model},
          {"fgat_blocks", c.model.fgat_blocks},
          {"heads", c.model.encoder.heads},
          {"d_ff", c.model.encoder.d_ff},
          {"layers", c.model.encoder.layers},
          {"dropout", c.model.dropout_rate},
          {"leaky_slope", c.model.leaky_slope},
          {"eps", c.model.eps},
          {"ffn_hidden", c.model.ffn_hidden},
          {"gru_hidden", c.model.gru_hidden}}},
        {"graph",
         {{"alpha", c.model.graph.alpha},
          {"sigma", c.model.graph.sigma},
          {"k", c.model.graph.k},
          {"pooling", std::string(graph::to_string(c.model.graph.pooling))},
          {"global_top_k", c.model.graph.global_top_k}}},
        {"train",
         {{"epochs", c.train.epochs},
          {"batch_size", c.train.batch_size},
          {"learning_rate", c.train.learning_rate},
          {"patience", c.train.patience},
          {"missing_rate", c.train.missing_rate},
          {"stride", c.train.stride},
          {"max_grad_norm", c.train.max_grad_norm},
          {"device", c.train.device}}},
        {"sweep", {{"models", models}, {"rates", c.sweep_rates}, {"seeds", c.sweep_seeds}, {"mean_reference", c.mean_reference}}},
        {"seed", c.seed}};
    if (!c.output_dir.empty()) out["output_dir"] = c.output_dir;
    return out;
}

std::string hash(const RunConfig& c) {
    auto doc = to_json(c);
    doc.erase("output_dir");
    const std::string text = doc.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf, 12);
}

harness::SweepConfig sweep_config(const RunConfig& c) {
    harness::SweepConfig sc;
    sc.models = c.sweep_models;
    sc.rates = c.sweep_rates;
    sc.seeds = c.sweep_seeds;
    sc.include_mean_reference = c.mean_reference;
    sc.eval_stride = c.eval_stride;
    sc.model = c.model;
    sc.train = c.train;
    return sc;
}

data::TimeSeriesDataset load_dataset(const DatasetSource& source) {
    if (source.synthetic) {
        auto ds = data::synth_generate(source.nodes, source.samples, source.seed, source.synth).dataset;
        if (!source.name.empty()) ds.name = source.name;
        return ds;
    }
    if (source.path.empty()) throw ConfigError("$.dataset: no dataset path or synthetic spec given");
    auto ds = data::load_csv(source.path);
    if (!source.name.empty()) ds.name = source.name;
    return ds;
}

}  // namespace fgatt::config
