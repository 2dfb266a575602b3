#include "fgatt/checkpoint.hpp"

#include "support/helpers.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>

using namespace fgatt;

namespace {

class CheckpointFile : public ::testing::Test {
protected:
    std::filesystem::path path = std::filesystem::temp_directory_path() /
                                 ("fgatt_ckpt_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) + ".json");
    void TearDown() override { std::filesystem::remove(path); }

    nlohmann::json read() const {
        std::ifstream in(path);
        return nlohmann::json::parse(in);
    }
    void write(const nlohmann::json& j) const { std::ofstream(path) << j.dump(); }
};

model::ModelConfig config(model::ModelKind kind) {
    model::ModelConfig c;
    c.kind = kind;
    c.window_length = 6;
    c.node_count = 4;
    c.d_model = 8;
    c.encoder.heads = 2;
    c.encoder.d_ff = 16;
    c.encoder.layers = 1;
    c.ffn_hidden = 8;
    c.gru_hidden = 4;
    c.init_seed = 3;
    return c;
}

data::NormalizationStats stats() {
    data::NormalizationStats s;
    s.min = (RowVector(4) << -1.5, 0.0, 2.0, 1e-3).finished();
    s.max = (RowVector(4) << 7.25, 1.0, 2.0, 0.1).finished();
    return s;
}

}  // namespace

TEST_F(CheckpointFile, RoundTripPreservesPredictionsExactly) {
    std::mt19937_64 rng(101);
    for (auto kind : {model::ModelKind::fgatt, model::ModelKind::ffn, model::ModelKind::bgru, model::ModelKind::transformer}) {
        auto m = model::make_model(config(kind));
        for (auto& p : m->parameters()) p.value = testing_support::random_matrix(rng, p.value.rows(), p.value.cols());
        checkpoint::save(path.string(), *m, stats(), "synthetic", {0.6, 0.2, 0.2}, 11);
        const auto ck = checkpoint::load(path.string());
        EXPECT_EQ(ck.model->config().kind, kind);
        EXPECT_TRUE(ck.model->parameters().snapshot() == m->parameters().snapshot());
        EXPECT_TRUE(ck.stats.min == stats().min);
        EXPECT_TRUE(ck.stats.max == stats().max);
        EXPECT_EQ(ck.dataset_name, "synthetic");
        EXPECT_DOUBLE_EQ(ck.split.train, 0.6);
        EXPECT_EQ(ck.seed, 11u);
        const auto w = data::apply_missing_mask(testing_support::random_matrix(rng, 6, 4, 0.0, 1.0), 0.5, 1);
        EXPECT_TRUE(model::forward(*ck.model, w) == model::forward(*m, w));
    }
}

TEST_F(CheckpointFile, RejectsForeignFormat) {
    auto m = model::make_model(config(model::ModelKind::ffn));
    checkpoint::save(path.string(), *m, stats(), "d", {}, 0);
    auto j = read();
    j["format"] = "something-else/2";
    write(j);
    EXPECT_THROW(checkpoint::load(path.string()), InputError);
}

TEST_F(CheckpointFile, RejectsMissingOrMisshapenParameters) {
    auto m = model::make_model(config(model::ModelKind::transformer));
    checkpoint::save(path.string(), *m, stats(), "d", {}, 0);
    const auto original = read();

    auto j = original;
    j["parameters"].erase(j["parameters"].begin());
    write(j);
    EXPECT_THROW(checkpoint::load(path.string()), InputError);

    j = original;
    j["parameters"][0]["rows"] = j["parameters"][0]["rows"].get<int>() + 1;
    write(j);
    EXPECT_THROW(checkpoint::load(path.string()), InputError);

    j = original;
    j["parameters"][0]["name"] = "nope";
    write(j);
    EXPECT_THROW(checkpoint::load(path.string()), InputError);
}

TEST_F(CheckpointFile, RejectsStatsForADifferentNodeCount) {
    auto m = model::make_model(config(model::ModelKind::ffn));
    auto s = stats();
    s.min.conservativeResize(3);
    s.max.conservativeResize(3);
    checkpoint::save(path.string(), *m, s, "d", {}, 0);
    EXPECT_THROW(checkpoint::load(path.string()), InputError);
}

TEST(Checkpoint, MissingFileIsAnInputError) {
    EXPECT_THROW(checkpoint::load("/nonexistent/ckpt.json"), InputError);
}
