#pragma once
// Transformer encoder applied along the time axis.
//
// Sequences are stored row-stacked: a (B * T) x d_model matrix holds B
// independent sequences of length T. Attention never crosses a block boundary.

#include "fgatt/autodiff.hpp"
#include "fgatt/layers.hpp"

#include <random>
#include <vector>

namespace fgatt::temporal {

struct EncoderConfig {
    Eigen::Index d_model = 64;
    Eigen::Index heads = 4;
    Eigen::Index d_ff = 256;
    std::size_t layers = 2;
    double dropout_rate = 0.1;
    Eigen::Index max_len = 512;
    double eps = 1e-5;

    Eigen::Index head_dim() const noexcept { return d_model / heads; }
    void validate() const;
};

/// softmax(Q K^T / sqrt(d_k)) V with the softmax over keys. Serial reference.
/// When `weights` is non-null it receives the m x n attention matrix.
Matrix scaled_dot_attention(const Matrix& q, const Matrix& k, const Matrix& v, Matrix* weights = nullptr);

/// Fixed sinusoidal table: even columns sin(pos / 10000^(2i/d)), odd columns cos of the same angle.
Matrix positional_encoding(Eigen::Index length, Eigen::Index d_model);

/// Collects every attention matrix produced during a forward pass.
struct AttentionProbe {
    std::vector<Matrix> weights;
};

/// Multi-head attention core on row-stacked blocks: each (block, head) pair runs
/// scaled_dot_attention on its column slice. Serial reference kernel.
Matrix blocked_attention_serial(const Matrix& q, const Matrix& k, const Matrix& v, Eigen::Index block, Eigen::Index heads);

/// OpenMP kernel over blocks; identical output to the serial kernel.
Matrix blocked_attention_forward(const Matrix& q, const Matrix& k, const Matrix& v, Eigen::Index block, Eigen::Index heads,
                                 std::vector<Matrix>* weights = nullptr);

ad::Var blocked_attention(ad::Var q, ad::Var k, ad::Var v, Eigen::Index block, Eigen::Index heads,
                          AttentionProbe* probe = nullptr);

class MultiHeadAttention {
public:
    MultiHeadAttention() = default;
    MultiHeadAttention(ad::ParameterSet& params, const std::string& name, const EncoderConfig& config,
                       std::mt19937_64& rng);

    ad::Var operator()(ad::Tape& tape, ad::Var x, Eigen::Index block, AttentionProbe* probe = nullptr) const;

private:
    nn::Linear query_, key_, value_, output_;
    Eigen::Index heads_ = 1;
};

class EncoderLayer {
public:
    EncoderLayer() = default;
    EncoderLayer(ad::ParameterSet& params, const std::string& name, const EncoderConfig& config, std::mt19937_64& rng);

    ad::Var operator()(ad::Tape& tape, ad::Var x, Eigen::Index block, bool training, std::mt19937_64& rng,
                       AttentionProbe* probe = nullptr) const;

private:
    MultiHeadAttention attention_;
    nn::LayerNorm norm1_, norm2_;
    nn::Linear ff1_, ff2_;
    double dropout_rate_ = 0.1;
};

/// L post-norm encoder layers. Positional encoding is applied by the caller.
class TemporalEncoder {
public:
    TemporalEncoder() = default;
    TemporalEncoder(ad::ParameterSet& params, const std::string& name, const EncoderConfig& config, std::mt19937_64& rng);

    ad::Var operator()(ad::Tape& tape, ad::Var x, Eigen::Index block, bool training, std::mt19937_64& rng,
                       AttentionProbe* probe = nullptr) const;

    const EncoderConfig& config() const noexcept { return config_; }

private:
    EncoderConfig config_;
    std::vector<EncoderLayer> layers_;
};

/// Adds the positional table to every length-`block` sequence of x.
ad::Var add_positional_encoding(ad::Var x, Eigen::Index block);

}  // namespace fgatt::temporal
