#include "fgatt/temporal_encoder.hpp"

#include "support/helpers.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace fgatt;
using namespace fgatt::temporal;
using testing_support::random_matrix;

namespace {

EncoderConfig small_config() {
    EncoderConfig c;
    c.d_model = 8;
    c.heads = 2;
    c.d_ff = 16;
    c.layers = 2;
    c.dropout_rate = 0.0;
    return c;
}

Matrix permute_rows(const Matrix& x, const std::vector<Eigen::Index>& perm) {
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) out.row(r) = x.row(perm[static_cast<std::size_t>(r)]);
    return out;
}

}  // namespace

TEST(ScaledDotAttention, SingleKeyReturnsItsValue) {
    std::mt19937_64 rng(51);
    const Matrix v = random_matrix(rng, 1, 3);
    const Matrix out = scaled_dot_attention(random_matrix(rng, 4, 2), random_matrix(rng, 1, 2), v);
    for (Eigen::Index r = 0; r < 4; ++r) EXPECT_TRUE(out.row(r).isApprox(v.row(0), 1e-15));
}

TEST(ScaledDotAttention, IdenticalKeysAverageTheValues) {
    std::mt19937_64 rng(52);
    const Matrix k = Matrix::Constant(5, 3, 0.4);
    const Matrix v = random_matrix(rng, 5, 2);
    const Matrix out = scaled_dot_attention(random_matrix(rng, 2, 3), k, v);
    EXPECT_TRUE(out.row(0).isApprox(v.colwise().mean(), 1e-14));
}

TEST(ScaledDotAttention, HandExample) {
    const Matrix q = Matrix::Zero(1, 1);
    const Matrix k = (Matrix(2, 1) << 0.0, std::log(3.0)).finished();
    const Matrix v = (Matrix(2, 1) << 1.0, 5.0).finished();
    Matrix weights;
    // q = 0 makes both logits zero, so the weights are uniform: (1 + 5) / 2.
    EXPECT_NEAR(scaled_dot_attention(q, k, v, &weights)(0, 0), 3.0, 1e-15);
    // With q = 1 the logits are (0, ln 3): weights (0.25, 0.75) and output 4.
    EXPECT_NEAR(scaled_dot_attention(Matrix::Ones(1, 1), k, v, &weights)(0, 0), 4.0, 1e-14);
    EXPECT_NEAR(weights(0, 0), 0.25, 1e-15);
    EXPECT_NEAR(weights(0, 1), 0.75, 1e-15);
}

TEST(ScaledDotAttention, MatchesOracleAndRowsSumToOne) {
    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 30; ++trial) {
        const Matrix q = random_matrix(rng, 4, 3), k = random_matrix(rng, 6, 3), v = random_matrix(rng, 6, 2);
        Matrix w;
        const Matrix out = scaled_dot_attention(q, k, v, &w);
        std::vector<std::vector<double>> ow;
        const auto expected = oracle::attention(testing_support::to_rows(q), testing_support::to_rows(k),
                                                testing_support::to_rows(v), &ow);
        for (Eigen::Index i = 0; i < 4; ++i) {
            EXPECT_NEAR(w.row(i).sum(), 1.0, 1e-12);
            for (Eigen::Index c = 0; c < 2; ++c) EXPECT_NEAR(out(i, c), expected[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)], 1e-13);
        }
    }
}

TEST(ScaledDotAttention, DimensionMismatchIsInputError) {
    EXPECT_THROW(scaled_dot_attention(Matrix::Ones(2, 3), Matrix::Ones(2, 2), Matrix::Ones(2, 2)), InputError);
    EXPECT_THROW(scaled_dot_attention(Matrix::Ones(2, 2), Matrix::Ones(3, 2), Matrix::Ones(2, 2)), InputError);
}

TEST(PositionalEncoding, FirstRowAlternatesZeroAndOne) {
    const Matrix pe = positional_encoding(4, 6);
    for (Eigen::Index c = 0; c < 6; ++c) EXPECT_DOUBLE_EQ(pe(0, c), c % 2 == 0 ? 0.0 : 1.0);
}

TEST(PositionalEncoding, BoundedAndDistinctRows) {
    const Matrix pe = positional_encoding(512, 2);
    EXPECT_LE(pe.cwiseAbs().maxCoeff(), 1.0);
    for (Eigen::Index a = 0; a < 512; ++a) {
        for (Eigen::Index b = a + 1; b < 512; ++b) {
            ASSERT_GT((pe.row(a) - pe.row(b)).norm(), 0.0) << a << " vs " << b;
        }
    }
}

TEST(EncoderConfig, HeadsMustDivideWidth) {
    EncoderConfig c;
    c.d_model = 10;
    c.heads = 4;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.dropout_rate = 1.0;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(BlockedAttention, ParallelEqualsSerialExactly) {
    std::mt19937_64 rng(54);
    const Matrix q = random_matrix(rng, 64, 8), k = random_matrix(rng, 64, 8), v = random_matrix(rng, 64, 8);
    EXPECT_TRUE(blocked_attention_serial(q, k, v, 16, 4) == blocked_attention_forward(q, k, v, 16, 4));
}

TEST(BlockedAttention, BlocksDoNotInteract) {
    std::mt19937_64 rng(55);
    Matrix q = random_matrix(rng, 8, 4), k = random_matrix(rng, 8, 4), v = random_matrix(rng, 8, 4);
    const Matrix before = blocked_attention_forward(q, k, v, 4, 2);
    v.bottomRows(4).setRandom();
    k.bottomRows(4).setRandom();
    const Matrix after = blocked_attention_forward(q, k, v, 4, 2);
    EXPECT_TRUE(before.topRows(4) == after.topRows(4));
}

TEST(BlockedAttention, RowsOfEveryHeadSumToOne) {
    std::mt19937_64 rng(56);
    std::vector<Matrix> weights;
    blocked_attention_forward(random_matrix(rng, 12, 6), random_matrix(rng, 12, 6), random_matrix(rng, 12, 6), 4, 3, &weights);
    ASSERT_EQ(weights.size(), 9u);
    for (const auto& w : weights) {
        for (Eigen::Index r = 0; r < w.rows(); ++r) EXPECT_NEAR(w.row(r).sum(), 1.0, 1e-12);
    }
}

TEST(BlockedAttention, ShapeErrors) {
    EXPECT_THROW(blocked_attention_forward(Matrix::Ones(6, 4), Matrix::Ones(6, 4), Matrix::Ones(6, 4), 4, 2), InputError);
    EXPECT_THROW(blocked_attention_forward(Matrix::Ones(8, 4), Matrix::Ones(8, 4), Matrix::Ones(8, 4), 4, 3), InputError);
}

TEST(TemporalEncoder, AttentionRowsSumToOneAtEveryHeadAndLayer) {
    std::mt19937_64 rng(57);
    ad::ParameterSet params;
    const auto cfg = small_config();
    TemporalEncoder enc(params, "enc", cfg, rng);
    AttentionProbe probe;
    ad::Tape t;
    enc(t, t.constant(random_matrix(rng, 12, 8)), 4, false, rng, &probe);
    ASSERT_EQ(probe.weights.size(), cfg.layers * 3 * 2);
    for (const auto& w : probe.weights) {
        for (Eigen::Index r = 0; r < w.rows(); ++r) EXPECT_NEAR(w.row(r).sum(), 1.0, 1e-6);
    }
}

TEST(TemporalEncoder, EquivariantToTimePermutationWithoutPositions) {
    std::mt19937_64 rng(58);
    ad::ParameterSet params;
    TemporalEncoder enc(params, "enc", small_config(), rng);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix x = random_matrix(rng, 6, 8);
        std::vector<Eigen::Index> perm(6);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        ad::Tape t;
        const Matrix y = enc(t, t.constant(x), 6, false, rng).value();
        const Matrix yp = enc(t, t.constant(permute_rows(x, perm)), 6, false, rng).value();
        EXPECT_TRUE(yp.isApprox(permute_rows(y, perm), 1e-12));
    }
}

TEST(TemporalEncoder, PositionsBreakEquivariance) {
    std::mt19937_64 rng(59);
    ad::ParameterSet params;
    TemporalEncoder enc(params, "enc", small_config(), rng);
    const Matrix x = random_matrix(rng, 6, 8);
    const std::vector<Eigen::Index> perm{1, 0, 2, 3, 4, 5};
    ad::Tape t;
    const Matrix y = enc(t, add_positional_encoding(t.constant(x), 6), 6, false, rng).value();
    const Matrix yp = enc(t, add_positional_encoding(t.constant(permute_rows(x, perm)), 6), 6, false, rng).value();
    EXPECT_FALSE(yp.isApprox(permute_rows(y, perm), 1e-6));
}

TEST(TemporalEncoder, GradientsMatchCentralDifferences) {
    std::mt19937_64 rng(60);
    ad::ParameterSet params;
    TemporalEncoder enc(params, "enc", small_config(), rng);
    testing_support::randomize_offsets(params, rng);
    auto& input = params.add("input", random_matrix(rng, 4, 8));
    const Matrix weights = random_matrix(rng, 4, 8);
    const auto r = testing_support::check_gradients(params, [&](ad::Tape& t) {
        std::mt19937_64 unused(0);
        return ad::weighted_sum(enc(t, add_positional_encoding(t.parameter(input), 4), 4, false, unused), weights);
    }, 1e-5, 1e-5);
    EXPECT_LT(r.max_relative_error, 1e-4) << "worst " << r.worst_parameter;
    // A key bias shifts every logit of a query row equally, so softmax cancels it.
    for (std::size_t l = 0; l < 2; ++l) {
        const auto* kb = params.find("enc.layer" + std::to_string(l) + ".attention.key.bias");
        ASSERT_NE(kb, nullptr);
        EXPECT_LT(kb->grad.cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(BlockedAttentionOp, GradientsMatchCentralDifferences) {
    std::mt19937_64 rng(61);
    ad::ParameterSet params;
    auto& q = params.add("q", random_matrix(rng, 8, 4));
    auto& k = params.add("k", random_matrix(rng, 8, 4));
    auto& v = params.add("v", random_matrix(rng, 8, 4));
    const Matrix w = random_matrix(rng, 8, 4);
    const auto r = testing_support::check_gradients(params, [&](ad::Tape& t) {
        return ad::weighted_sum(blocked_attention(t.parameter(q), t.parameter(k), t.parameter(v), 4, 2), w);
    });
    EXPECT_LT(r.max_relative_error, 1e-7) << "worst " << r.worst_parameter;
}

TEST(EncoderLayer, DropoutOnlyWhenTraining) {
    std::mt19937_64 rng(62);
    ad::ParameterSet params;
    auto cfg = small_config();
    cfg.dropout_rate = 0.5;
    TemporalEncoder enc(params, "enc", cfg, rng);
    const Matrix x = random_matrix(rng, 4, 8);
    ad::Tape t;
    std::mt19937_64 r1(1), r2(2);
    const Matrix eval1 = enc(t, t.constant(x), 4, false, r1).value();
    const Matrix eval2 = enc(t, t.constant(x), 4, false, r2).value();
    EXPECT_TRUE(eval1 == eval2);
    const Matrix train1 = enc(t, t.constant(x), 4, true, r1).value();
    const Matrix train2 = enc(t, t.constant(x), 4, true, r2).value();
    EXPECT_FALSE(train1 == train2);
}
