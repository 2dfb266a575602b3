#include "fgatt/fgat_layer.hpp"

#include "support/helpers.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

using namespace fgatt;
using namespace fgatt::fgat;
using testing_support::random_graph;
using testing_support::random_matrix;

namespace {

FgatBlockParams random_params(std::mt19937_64& rng, Eigen::Index din, Eigen::Index dout) {
    FgatBlockParams p;
    p.weight = random_matrix(rng, din, dout);
    p.attention = random_matrix(rng, 1, 2 * dout).row(0);
    p.gamma = RowVector::Ones(dout);
    p.beta = RowVector::Zero(dout);
    return p;
}

std::vector<std::vector<std::size_t>> neighbor_lists(const graph::DynamicGraph& g) {
    std::vector<std::vector<std::size_t>> out(g.node_count());
    for (std::size_t i = 0; i < g.node_count(); ++i) out[i].assign(g.neighbors(i).begin(), g.neighbors(i).end());
    return out;
}

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

}  // namespace

TEST(AttentionCoefficients, SingletonNeighborhoodHasWeightOne) {
    std::mt19937_64 rng(31);
    const graph::DynamicGraph g(3, {{0, 1, 0.5}, {1, 2, 0.5}, {2, 0, 0.5}});
    const auto alpha = attention_coefficients(random_matrix(rng, 3, 4), g, random_params(rng, 4, 4));
    for (const auto& [key, a] : alpha) EXPECT_DOUBLE_EQ(a, 1.0);
}

TEST(AttentionCoefficients, IdenticalNeighborsAreUniform) {
    std::mt19937_64 rng(32);
    Matrix h = Matrix::Zero(4, 3);
    h.row(0) = random_matrix(rng, 1, 3);
    for (Eigen::Index i = 1; i < 4; ++i) h.row(i) = h.row(0) * 0.0 + RowVector::Constant(3, 0.7);
    const graph::DynamicGraph g(4, {{0, 1, 1}, {0, 2, 1}, {0, 3, 1}, {1, 0, 1}, {2, 0, 1}, {3, 0, 1}});
    const auto alpha = attention_coefficients(h, g, random_params(rng, 3, 3));
    for (std::size_t j = 1; j < 4; ++j) EXPECT_NEAR(alpha.at({0, j}), 1.0 / 3.0, 1e-15);
}

TEST(AttentionCoefficients, MatchScalarOracleAndSumToOne) {
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 50; ++trial) {
        const auto g = random_graph(rng, 5);
        const Matrix h = random_matrix(rng, 5, 3);
        const auto p = random_params(rng, 3, 4);
        const auto alpha = attention_coefficients(h, g, p);
        const auto expected = oracle::gat_coefficients(testing_support::to_rows(h), testing_support::to_rows(p.weight),
                                                       std::vector<double>(p.attention.data(), p.attention.data() + 8),
                                                       neighbor_lists(g), p.leaky_slope);
        ASSERT_EQ(alpha.size(), expected.size());
        std::vector<double> row_sum(5, 0.0);
        for (const auto& [key, a] : expected) {
            EXPECT_NEAR(alpha.at(key), a, 1e-13);
            row_sum[key.first] += alpha.at(key);
        }
        for (double s : row_sum) EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(AttentionCoefficients, EmptyNeighborhoodIsStructuralError) {
    std::mt19937_64 rng(34);
    const graph::DynamicGraph g(3, {{0, 1, 0.5}, {1, 0, 0.5}});
    EXPECT_THROW(attention_coefficients(random_matrix(rng, 3, 2), g, random_params(rng, 2, 2)), StructuralError);
}

TEST(GatAggregate, SingleNeighborWithIdentityWeight) {
    const Matrix h = (Matrix(3, 2) << 1.0, -2.0, 0.5, 3.0, -4.0, 0.25).finished();
    const graph::DynamicGraph g(3, {{0, 1, 1}, {1, 2, 1}, {2, 0, 1}});
    FgatBlockParams p;
    p.weight = Matrix::Identity(2, 2);
    p.attention = RowVector::Constant(4, 0.3);
    p.gamma = RowVector::Ones(2);
    p.beta = RowVector::Zero(2);
    p.leaky_slope = 0.01;
    const Matrix out = gat_aggregate(h, g, p);
    EXPECT_DOUBLE_EQ(out(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(out(0, 1), 3.0);
    EXPECT_DOUBLE_EQ(out(1, 0), -4.0 * 0.01);
    EXPECT_DOUBLE_EQ(out(2, 1), -2.0 * 0.01);
}

TEST(GatAggregate, ZeroFeaturesGiveZeroOutput) {
    std::mt19937_64 rng(35);
    const auto g = random_graph(rng, 6);
    EXPECT_TRUE(gat_aggregate(Matrix::Zero(6, 3), g, random_params(rng, 3, 5)).isZero(0.0));
}

TEST(GatAggregate, MatchesOracleAggregation) {
    std::mt19937_64 rng(36);
    const auto g = random_graph(rng, 5);
    const Matrix h = random_matrix(rng, 5, 3);
    const auto p = random_params(rng, 3, 3);
    const auto alpha = oracle::gat_coefficients(testing_support::to_rows(h), testing_support::to_rows(p.weight),
                                                std::vector<double>(p.attention.data(), p.attention.data() + 6),
                                                neighbor_lists(g), p.leaky_slope);
    const Matrix z = h * p.weight;
    const Matrix out = gat_aggregate(h, g, p);
    for (std::size_t i = 0; i < 5; ++i) {
        for (Eigen::Index c = 0; c < 3; ++c) {
            double s = 0.0;
            for (std::size_t j : g.neighbors(i)) s += alpha.at({i, j}) * z(static_cast<Eigen::Index>(j), c);
            EXPECT_NEAR(out(static_cast<Eigen::Index>(i), c), oracle::leaky(s, p.leaky_slope), 1e-13);
        }
    }
}

TEST(LayerNorm, ThreeElementExample) {
    const Vector y = layer_norm(vec({1, 2, 3}), Vector::Ones(3), Vector::Zero(3), 1e-12);
    EXPECT_NEAR(y(0), -1.224744871391589, 1e-9);
    EXPECT_NEAR(y(1), 0.0, 1e-12);
    EXPECT_NEAR(y(2), 1.224744871391589, 1e-9);
}

TEST(LayerNorm, ConstantInputMapsToZero) {
    const Vector y = layer_norm(Vector::Constant(5, 3.3), Vector::Ones(5), Vector::Zero(5), 1e-5);
    EXPECT_LT(y.cwiseAbs().maxCoeff(), 1e-6);
}

TEST(LayerNorm, ZeroGainOutputsBeta) {
    std::mt19937_64 rng(37);
    const Vector beta = random_matrix(rng, 4, 1).col(0);
    EXPECT_TRUE(layer_norm(random_matrix(rng, 4, 1).col(0), Vector::Zero(4), beta, 1e-5) == beta);
}

TEST(LayerNorm, MeanZeroVarianceOneContract) {
    std::mt19937_64 rng(38);
    for (int trial = 0; trial < 100; ++trial) {
        const Vector x = random_matrix(rng, 16, 1, -5, 5).col(0);
        const Vector y = layer_norm(x, Vector::Ones(16), Vector::Zero(16), 1e-5);
        const auto oy = oracle::layer_norm(std::vector<double>(x.data(), x.data() + 16), std::vector<double>(16, 1.0),
                                           std::vector<double>(16, 0.0), 1e-5);
        for (Eigen::Index i = 0; i < 16; ++i) EXPECT_NEAR(y(i), oy[static_cast<std::size_t>(i)], 1e-12);
        EXPECT_LT(std::abs(y.mean()), 1e-6);
        const double var = (y.array() - y.mean()).square().mean();
        const double sample_var = (x.array() - x.mean()).square().mean();
        EXPECT_NEAR(var, sample_var / (sample_var + 1e-5), 1e-9);
        EXPECT_LE(std::abs(1.0 - var), 1e-5 / sample_var + 1e-12);
    }
}

TEST(FgatBlock, ResidualPlusNormalizedAggregate) {
    std::mt19937_64 rng(39);
    const auto g = random_graph(rng, 5);
    const Matrix h = random_matrix(rng, 5, 4);
    const auto p = random_params(rng, 4, 4);
    std::mt19937_64 unused(0);
    const Matrix out = fgat_block(h, g, p, false, unused);
    const Matrix agg = gat_aggregate(h, g, p);
    for (Eigen::Index i = 0; i < 5; ++i) {
        const Vector expected = layer_norm((h.row(i) + agg.row(i)).transpose(), p.gamma.transpose(), p.beta.transpose(), p.eps);
        EXPECT_TRUE(out.row(i).transpose().isApprox(expected, 1e-12));
    }
}

TEST(FgatBlock, DeterministicWithoutDropout) {
    std::mt19937_64 rng(40);
    const auto g = random_graph(rng, 6);
    const Matrix h = random_matrix(rng, 6, 3);
    const auto p = random_params(rng, 3, 3);
    std::mt19937_64 r1(1), r2(2);
    EXPECT_TRUE(fgat_block(h, g, p, false, r1) == fgat_block(h, g, p, false, r2));
}

TEST(FgatBlock, ResidualWidthMismatchIsConfigError) {
    std::mt19937_64 rng(41);
    const auto g = random_graph(rng, 4);
    std::mt19937_64 unused(0);
    EXPECT_THROW(fgat_block(random_matrix(rng, 4, 3), g, random_params(rng, 3, 5), false, unused), ConfigError);
}

TEST(FgatBlockParams, RejectsDropoutOfOne) {
    std::mt19937_64 rng(42);
    auto p = random_params(rng, 2, 2);
    p.dropout_rate = 1.0;
    EXPECT_THROW(p.validate(), ConfigError);
}

TEST(GraphAttentionKernels, ParallelEqualsSerialExactly) {
    std::mt19937_64 rng(43);
    std::vector<graph::DynamicGraph> graphs;
    for (int g = 0; g < 20; ++g) graphs.push_back(random_graph(rng, 7));
    std::vector<const graph::DynamicGraph*> ptrs;
    for (const auto& g : graphs) ptrs.push_back(&g);
    const auto index = make_neighbor_index(ptrs);
    EXPECT_EQ(index.groups(), 20u);
    const Matrix z = random_matrix(rng, 140, 6);
    const RowVector a = random_matrix(rng, 1, 12).row(0);
    AttentionState s1, s2;
    const Matrix serial = graph_attention_forward_serial(z, a, index, 0.2, &s1);
    const Matrix parallel = graph_attention_forward(z, a, index, 0.2, &s2);
    EXPECT_TRUE(serial == parallel);
    EXPECT_EQ(s1.weights, s2.weights);
}

TEST(GraphAttentionKernels, BatchedGroupsMatchPerGraphCoefficients) {
    std::mt19937_64 rng(44);
    const auto g0 = random_graph(rng, 4);
    const auto g1 = random_graph(rng, 4);
    const graph::DynamicGraph* ptrs[] = {&g0, &g1};
    const auto index = make_neighbor_index(ptrs);
    const auto p = random_params(rng, 3, 3);
    const Matrix h = random_matrix(rng, 8, 3);
    AttentionState state;
    graph_attention_forward(h * p.weight, p.attention, index, p.leaky_slope, &state);
    const auto a1 = attention_coefficients(h.bottomRows(4), g1, p);
    std::size_t e = index.row_ptr[4];
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j : g1.neighbors(i)) EXPECT_NEAR(state.weights[e++], a1.at({i, j}), 1e-14);
    }
}

TEST(FgatBlockGradient, MatchesCentralDifferencesOnFourNodes) {
    std::mt19937_64 rng(45);
    for (int trial = 0; trial < 5; ++trial) {
        ad::ParameterSet params;
        FgatBlock block(params, "fgat", 3, 0.0, 0.01, 1e-5, rng);
        params.find("fgat.norm.gamma")->value = random_matrix(rng, 1, 3, 0.5, 1.5);
        params.find("fgat.norm.beta")->value = random_matrix(rng, 1, 3);
        auto& input = params.add("input", random_matrix(rng, 4, 3));
        const auto g = random_graph(rng, 4);
        const graph::DynamicGraph* ptrs[] = {&g};
        const auto index = make_neighbor_index(ptrs);
        const Matrix weights = random_matrix(rng, 4, 3);
        const auto r = testing_support::check_gradients(params, [&](ad::Tape& t) {
            std::mt19937_64 unused(0);
            return ad::weighted_sum(block(t, t.parameter(input), index, false, unused), weights);
        });
        EXPECT_LT(r.max_relative_error, 1e-4) << "worst " << r.worst_parameter;
    }
}

TEST(FgatBlock, TapeForwardMatchesReferenceBlock) {
    std::mt19937_64 rng(46);
    ad::ParameterSet params;
    FgatBlock block(params, "fgat", 4, 0.0, 0.01, 1e-5, rng);
    const auto g = random_graph(rng, 6);
    const graph::DynamicGraph* ptrs[] = {&g};
    const auto index = make_neighbor_index(ptrs);
    const Matrix h = random_matrix(rng, 6, 4);
    ad::Tape t;
    std::mt19937_64 unused(0);
    const Matrix tape_out = block(t, t.constant(h), index, false, unused).value();
    EXPECT_TRUE(tape_out.isApprox(fgat_block(h, g, block.params(), false, unused), 1e-12));
}
