#include "fgatt/graph_builder.hpp"

#include "support/helpers.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

using namespace fgatt;
using namespace fgatt::graph;
using testing_support::random_matrix;
using testing_support::uniform;
using testing_support::uniform_int;

namespace {

Matrix column(std::initializer_list<double> v) {
    Matrix m(static_cast<Eigen::Index>(v.size()), 1);
    Eigen::Index i = 0;
    for (double x : v) m(i++, 0) = x;
    return m;
}

std::vector<std::vector<double>> window_rows(const Matrix& w) {
    return testing_support::to_rows(w);
}

std::set<std::pair<std::size_t, std::size_t>> pairs(const DynamicGraph& g) {
    std::set<std::pair<std::size_t, std::size_t>> out;
    for (const auto& e : g.edges()) out.insert({e.source, e.target});
    return out;
}

}  // namespace

TEST(ScoreAtT, ThreeNodesOnALineMatchBruteForce) {
    const Matrix f = column({0.0, 1.0, 2.0});
    const fuzzy::Kernel k(1.0);
    const oracle::Points pts{{0.0}, {1.0}, {2.0}};
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            EXPECT_NEAR(score_at_t(f, i, j, 0.5, k), oracle::score(pts, i, j, 0.5, 1.0), 1e-15);
        }
    }
}

TEST(ScoreAtT, IdenticalNodesScoreOne) {
    const Matrix f = Matrix::Constant(4, 2, 0.3);
    for (double alpha : {0.0, 0.3, 1.0}) {
        EXPECT_DOUBLE_EQ(score_at_t(f, 0, 3, alpha, fuzzy::Kernel(0.5)), 1.0);
    }
}

TEST(ScoreAtT, AlphaHalfIsSymmetric) {
    std::mt19937_64 rng(21);
    const Matrix f = random_matrix(rng, 6, 2);
    const fuzzy::Kernel k(0.7);
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 6; ++j) {
            EXPECT_EQ(score_at_t(f, i, j, 0.5, k), score_at_t(f, j, i, 0.5, k));
        }
    }
}

TEST(ScoreAtT, AlphaOutOfRangeIsConfigError) {
    const Matrix f = column({0.0, 1.0});
    EXPECT_THROW(score_at_t(f, 0, 1, 1.5, fuzzy::Kernel(1.0)), ConfigError);
    EXPECT_THROW(score_at_t(f, 0, 1, -0.1, fuzzy::Kernel(1.0)), ConfigError);
}

TEST(ScoreMatrix, AgreesWithPairwiseScoresOnRandomFeatures) {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 50; ++trial) {
        const auto n = static_cast<Eigen::Index>(uniform_int(rng, 2, 8));
        const auto d = static_cast<Eigen::Index>(uniform_int(rng, 1, 3));
        const Matrix f = random_matrix(rng, n, d);
        const double alpha = uniform(rng);
        const fuzzy::Kernel k(uniform(rng, 0.2, 2.0));
        const Matrix s = score_matrix(f, alpha, k);
        const auto pts = testing_support::to_rows(f);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                EXPECT_NEAR(s(i, j), oracle::score(pts, static_cast<std::size_t>(i), static_cast<std::size_t>(j), alpha, k.sigma()),
                            1e-12);
                EXPECT_GE(s(i, j), 0.0);
                EXPECT_LE(s(i, j), 1.0);
            }
        }
    }
}

TEST(ScoreTensor, ParallelEqualsSerialExactly) {
    std::mt19937_64 rng(23);
    const Matrix w = random_matrix(rng, 16, 12, 0.0, 1.0);
    const fuzzy::Kernel k(0.3);
    const auto a = score_tensor_serial(w, 0.4, k);
    const auto b = score_tensor(w, 0.4, k);
    ASSERT_EQ(a.steps(), b.steps());
    for (std::size_t t = 0; t < a.steps(); ++t) EXPECT_TRUE(a.scores[t] == b.scores[t]) << "t = " << t;
}

TEST(PoolScores, ConstantScoresPoolToTheConstant) {
    ScoreTensor s{{Matrix::Constant(3, 3, 0.37), Matrix::Constant(3, 3, 0.37), Matrix::Constant(3, 3, 0.37)}};
    EXPECT_NEAR(pool_scores(s, Pooling::mean)(1, 2), 0.37, 1e-15);
    EXPECT_EQ(pool_scores(s, Pooling::max)(1, 2), 0.37);
}

TEST(PoolScores, TwoStepMeanAndMax) {
    Matrix a = Matrix::Zero(2, 2), b = Matrix::Zero(2, 2);
    a(0, 1) = 0.2;
    b(0, 1) = 0.8;
    const ScoreTensor s{{a, b}};
    EXPECT_NEAR(pool_scores(s, Pooling::mean)(0, 1), 0.5, 1e-15);
    EXPECT_EQ(pool_scores(s, Pooling::max)(0, 1), 0.8);
}

TEST(PoolScores, EmptyTimeAxisIsInputError) {
    EXPECT_THROW(pool_scores(ScoreTensor{}, Pooling::mean), InputError);
}

TEST(PoolScores, MeanLiesBetweenPerStepExtremes) {
    std::mt19937_64 rng(24);
    const Matrix w = random_matrix(rng, 8, 5, 0.0, 1.0);
    const auto s = score_tensor(w, 0.3, fuzzy::Kernel(0.4));
    const Matrix mean = pool_scores(s, Pooling::mean);
    for (Eigen::Index i = 0; i < 5; ++i) {
        for (Eigen::Index j = 0; j < 5; ++j) {
            double lo = 1.0, hi = 0.0;
            for (const auto& m : s.scores) {
                lo = std::min(lo, m(i, j));
                hi = std::max(hi, m(i, j));
            }
            EXPECT_GE(mean(i, j), lo - 1e-15);
            EXPECT_LE(mean(i, j), hi + 1e-15);
        }
    }
}

TEST(Pooling, ParsesNames) {
    EXPECT_EQ(parse_pooling("mean"), Pooling::mean);
    EXPECT_EQ(parse_pooling("max"), Pooling::max);
    EXPECT_THROW(parse_pooling("sum"), ConfigError);
    EXPECT_EQ(to_string(Pooling::max), "max");
}

TEST(BuildGraph, KAtLeastNMinusOneKeepsEveryOffDiagonalPair) {
    const Matrix pooled = Matrix::Constant(3, 3, 0.5);
    const auto g = build_graph(pooled, 2);
    EXPECT_EQ(g.edges().size(), 6u);
    EXPECT_EQ(build_graph(pooled, 10).edges().size(), 6u);
}

TEST(BuildGraph, TopOneIsTheRowArgmax) {
    Matrix pooled = Matrix::Zero(3, 3);
    pooled(0, 1) = 0.9;
    pooled(0, 2) = 0.4;
    pooled(1, 0) = 0.1;
    pooled(1, 2) = 0.2;
    pooled(2, 0) = 0.3;
    pooled(2, 1) = 0.3;
    const auto g = build_graph(pooled, 1);
    ASSERT_EQ(g.neighbors(0).size(), 1u);
    EXPECT_EQ(g.neighbors(0)[0], 1u);
    EXPECT_EQ(g.neighbors(1)[0], 2u);
    EXPECT_EQ(g.neighbors(2)[0], 0u);  // tie goes to the lower index
}

TEST(BuildGraph, MatchesSortOracleOnRandomMatrices) {
    std::mt19937_64 rng(25);
    for (int trial = 0; trial < 200; ++trial) {
        const Matrix pooled = random_matrix(rng, 6, 6, 0.0, 1.0);
        const std::size_t k = uniform_int(rng, 1, 3);
        const auto g = build_graph(pooled, k);
        const auto expected = oracle::top_k_edges(testing_support::to_rows(pooled), k);
        ASSERT_EQ(g.edges().size(), expected.size());
        for (std::size_t e = 0; e < expected.size(); ++e) {
            EXPECT_EQ(g.edges()[e].source, expected[e].source);
            EXPECT_EQ(g.edges()[e].target, expected[e].target);
            EXPECT_EQ(g.edges()[e].weight, expected[e].weight);
        }
    }
}

TEST(BuildGraph, TiesResolvedByLowerIndexOnCoarseScores) {
    std::mt19937_64 rng(26);
    for (int trial = 0; trial < 100; ++trial) {
        Matrix pooled(7, 7);
        for (Eigen::Index i = 0; i < pooled.size(); ++i) pooled.data()[i] = static_cast<double>(uniform_int(rng, 0, 3)) / 4.0;
        const std::size_t k = uniform_int(rng, 1, 6);
        const auto expected = oracle::top_k_edges(testing_support::to_rows(pooled), k);
        const auto g = build_graph(pooled, k);
        ASSERT_EQ(g.edges().size(), expected.size());
        for (std::size_t e = 0; e < expected.size(); ++e) {
            EXPECT_EQ(g.edges()[e].target, expected[e].target);
        }
    }
}

TEST(BuildGraph, Errors) {
    EXPECT_THROW(build_graph(Matrix::Zero(1, 1), 1), InputError);
    EXPECT_THROW(build_graph(Matrix::Zero(3, 3), 0), ConfigError);
    EXPECT_THROW(build_graph(Matrix::Zero(3, 2), 1), InputError);
}

TEST(BuildGraphGlobal, KeepsTheKBestOffDiagonalPairs) {
    std::mt19937_64 rng(27);
    const Matrix pooled = random_matrix(rng, 5, 5, 0.0, 1.0);
    const auto g = build_graph_global(pooled, 4);
    ASSERT_EQ(g.edges().size(), 4u);
    std::vector<double> off;
    for (Eigen::Index i = 0; i < 5; ++i)
        for (Eigen::Index j = 0; j < 5; ++j)
            if (i != j) off.push_back(pooled(i, j));
    std::sort(off.rbegin(), off.rend());
    double min_kept = 1.0;
    for (const auto& e : g.edges()) {
        EXPECT_NE(e.source, e.target);
        min_kept = std::min(min_kept, e.weight);
    }
    EXPECT_EQ(min_kept, off[3]);
}

TEST(DynamicGraph, RejectsSelfLoopsAndBadEndpoints) {
    EXPECT_THROW(DynamicGraph(3, {{1, 1, 0.5}}), StructuralError);
    EXPECT_THROW(DynamicGraph(3, {{0, 3, 0.5}}), StructuralError);
}

TEST(ConstructWindowGraph, PoolsThenSparsifies) {
    std::mt19937_64 rng(28);
    const Matrix targets = random_matrix(rng, 6, 5, 0.0, 1.0);
    Mask mask = Mask::Ones(6, 5);
    mask(2, 3) = 0;
    mask(4, 0) = 0;
    const auto window = make_masked_window(targets, mask, 9);
    GraphConfig cfg;
    cfg.sigma = 0.4;
    cfg.k = 2;
    cfg.alpha = 0.3;
    const auto g = construct_window_graph(window, cfg);
    EXPECT_EQ(g.built_from(), 9u);
    const auto pooled = oracle::pooled_scores(window_rows(window.values), 0.3, 0.4, false);
    const auto expected = oracle::top_k_edges(pooled, 2);
    ASSERT_EQ(g.edges().size(), expected.size());
    for (std::size_t e = 0; e < expected.size(); ++e) {
        EXPECT_EQ(g.edges()[e].target, expected[e].target);
        EXPECT_NEAR(g.edges()[e].weight, expected[e].weight, 1e-12);
    }
}

TEST(ConstructWindowGraph, PermutationEquivariantWithoutTies) {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 30; ++trial) {
        const Eigen::Index n = 6;
        const Matrix targets = random_matrix(rng, 5, n, 0.0, 1.0);
        std::vector<std::size_t> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Matrix permuted(targets.rows(), n);
        for (Eigen::Index c = 0; c < n; ++c) permuted.col(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(c)])) = targets.col(c);
        GraphConfig cfg;
        cfg.sigma = 0.5;
        cfg.k = 2;
        const auto g = construct_window_graph(make_masked_window(targets, Mask::Ones(5, n)), cfg);
        const auto gp = construct_window_graph(make_masked_window(permuted, Mask::Ones(5, n)), cfg);
        std::set<std::pair<std::size_t, std::size_t>> mapped;
        for (const auto& e : g.edges()) mapped.insert({perm[e.source], perm[e.target]});
        EXPECT_EQ(mapped, pairs(gp));
    }
}

TEST(ConstructWindowGraph, GlobalOptionBoundsTotalEdges) {
    std::mt19937_64 rng(30);
    GraphConfig cfg;
    cfg.k = 5;
    cfg.global_top_k = true;
    const auto g = construct_window_graph(make_masked_window(random_matrix(rng, 4, 6, 0, 1), Mask::Ones(4, 6)), cfg);
    EXPECT_EQ(g.edges().size(), 5u);
}

TEST(GraphConfig, Validation) {
    GraphConfig c;
    c.alpha = 2.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.sigma = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.k = 0;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(EdgeListCsv, HeaderAndRows) {
    const DynamicGraph g(3, {{0, 2, 0.25}, {1, 0, 0.5}});
    std::ostringstream out;
    write_edge_list_csv(g, out);
    EXPECT_EQ(out.str(), "source,target,weight\n0,2,0.25\n1,0,0.5\n");
}
