#include "fgatt/checkpoint.hpp"

#include "fgatt/config.hpp"

#include <fstream>
#include <set>

namespace fgatt::checkpoint {

namespace {

nlohmann::json row_to_json(const RowVector& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

RowVector row_from_json(const nlohmann::json& j) {
    const auto values = j.get<std::vector<double>>();
    RowVector out(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) out(static_cast<Eigen::Index>(i)) = values[i];
    return out;
}

}  // namespace

void save(const std::string& path, const model::ImputationModel& model, const data::NormalizationStats& stats,
          const std::string& dataset_name, const data::SplitSpec& split, std::uint64_t seed) {
    nlohmann::json params = nlohmann::json::array();
    for (const auto& p : model.parameters()) {
        params.push_back({{"name", p.name},
                          {"rows", p.value.rows()},
                          {"cols", p.value.cols()},
                          {"data", std::vector<double>(p.value.data(), p.value.data() + p.value.size())}});
    }
    const nlohmann::json doc = {
        {"format", kFormat},
        {"model", config::model_to_json(model.config())},
        {"normalization", {{"min", row_to_json(stats.min)}, {"max", row_to_json(stats.max)}}},
        {"dataset", dataset_name},
        {"split", {{"train", split.train}, {"val", split.val}, {"test", split.test}}},
        {"seed", seed},
        {"parameters", params}};
    std::ofstream out(path);
    if (!out) throw InputError("cannot write checkpoint " + path);
    out << doc.dump() << '\n';
    if (!out) throw InputError("failed writing checkpoint " + path);
}

Checkpoint load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open checkpoint " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path + ": not a JSON checkpoint: " + e.what());
    }
    if (doc.value("format", std::string()) != kFormat) {
        throw InputError(path + ": unsupported checkpoint format (expected " + std::string(kFormat) + ")");
    }
    try {
        Checkpoint ck;
        ck.model = model::make_model(config::model_from_json(doc.at("model")));
        ck.stats.min = row_from_json(doc.at("normalization").at("min"));
        ck.stats.max = row_from_json(doc.at("normalization").at("max"));
        ck.dataset_name = doc.value("dataset", std::string());
        const auto& s = doc.at("split");
        ck.split = {s.at("train").get<double>(), s.at("val").get<double>(), s.at("test").get<double>()};
        ck.seed = doc.value("seed", std::uint64_t{0});

        auto& params = ck.model->parameters();
        std::set<std::string> seen;
        for (const auto& entry : doc.at("parameters")) {
            const auto name = entry.at("name").get<std::string>();
            auto* p = params.find(name);
            if (p == nullptr) throw InputError(path + ": unknown parameter '" + name + "'");
            const auto rows = entry.at("rows").get<Eigen::Index>();
            const auto cols = entry.at("cols").get<Eigen::Index>();
            const auto values = entry.at("data").get<std::vector<double>>();
            if (rows != p->value.rows() || cols != p->value.cols() ||
                values.size() != static_cast<std::size_t>(rows * cols)) {
                throw InputError(path + ": shape mismatch for parameter '" + name + "'");
            }
            p->value = Eigen::Map<const Matrix>(values.data(), rows, cols);
            seen.insert(name);
        }
        if (seen.size() != params.size()) throw InputError(path + ": checkpoint is missing parameters");
        if (static_cast<std::size_t>(ck.stats.min.size()) != ck.model->config().node_count ||
            ck.stats.max.size() != ck.stats.min.size()) {
            throw InputError(path + ": normalization does not match node count");
        }
        return ck;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path + ": malformed checkpoint: " + e.what());
    }
}

}  // namespace fgatt::checkpoint
