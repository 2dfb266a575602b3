#include "fgatt/temporal_encoder.hpp"

#include <cmath>

namespace fgatt::temporal {

void EncoderConfig::validate() const {
    if (d_model < 1) throw ConfigError("encoder.d_model must be positive");
    if (heads < 1) throw ConfigError("encoder.heads must be positive");
    if (d_model % heads != 0) throw ConfigError("encoder.heads must divide encoder.d_model");
    if (d_ff < 1) throw ConfigError("encoder.d_ff must be positive");
    if (layers < 1) throw ConfigError("encoder.layers must be positive");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("encoder.dropout must lie in [0, 1)");
    if (max_len < 1) throw ConfigError("encoder.max_len must be positive");
}

namespace {

void softmax_rows(Matrix& s) {
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
        auto row = s.row(r);
        row.array() = (row.array() - row.maxCoeff()).exp();
        row /= row.sum();
    }
}

void check_blocks(const Matrix& q, const Matrix& k, const Matrix& v, Eigen::Index block, Eigen::Index heads) {
    if (q.rows() != k.rows() || q.rows() != v.rows() || q.cols() != k.cols() || q.cols() != v.cols()) {
        throw InputError("blocked attention: Q, K, V must share one shape");
    }
    if (block < 1 || q.rows() % block != 0) throw InputError("blocked attention: rows must be a multiple of the block length");
    if (heads < 1 || q.cols() % heads != 0) throw InputError("blocked attention: heads must divide the width");
}

// One (block, head) cell. Output slice is disjoint from every other cell's.
void attend_cell(const Matrix& q, const Matrix& k, const Matrix& v, Eigen::Index row0, Eigen::Index col0, Eigen::Index block,
                 Eigen::Index dk, Matrix& out, Matrix* weights) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    Matrix s = (q.block(row0, col0, block, dk) * k.block(row0, col0, block, dk).transpose()) * scale;
    softmax_rows(s);
    out.block(row0, col0, block, dk).noalias() = s * v.block(row0, col0, block, dk);
    if (weights != nullptr) *weights = std::move(s);
}

}  // namespace

Matrix scaled_dot_attention(const Matrix& q, const Matrix& k, const Matrix& v, Matrix* weights) {
    if (q.cols() != k.cols()) throw InputError("scaled_dot_attention: Q and K widths differ");
    if (k.rows() != v.rows()) throw InputError("scaled_dot_attention: K and V lengths differ");
    if (k.rows() == 0) throw InputError("scaled_dot_attention: no keys");
    const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
    Matrix s(q.rows(), k.rows());
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        for (Eigen::Index j = 0; j < k.rows(); ++j) {
            double dot = 0.0;
            for (Eigen::Index c = 0; c < q.cols(); ++c) dot += q(i, c) * k(j, c);
            s(i, j) = dot * scale;
        }
    }
    softmax_rows(s);
    Matrix out = s * v;
    if (weights != nullptr) *weights = std::move(s);
    return out;
}

Matrix positional_encoding(Eigen::Index length, Eigen::Index d_model) {
    if (length < 0 || d_model < 1) throw InputError("positional_encoding: invalid shape");
    Matrix pe(length, d_model);
    for (Eigen::Index pos = 0; pos < length; ++pos) {
        for (Eigen::Index c = 0; c < d_model; ++c) {
            const auto pair = static_cast<double>(c - c % 2);
            const double angle = static_cast<double>(pos) / std::pow(10000.0, pair / static_cast<double>(d_model));
            pe(pos, c) = c % 2 == 0 ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

Matrix blocked_attention_serial(const Matrix& q, const Matrix& k, const Matrix& v, Eigen::Index block, Eigen::Index heads) {
    check_blocks(q, k, v, block, heads);
    const Eigen::Index dk = q.cols() / heads;
    Matrix out(q.rows(), q.cols());
    for (Eigen::Index b = 0; b < q.rows() / block; ++b) {
        for (Eigen::Index h = 0; h < heads; ++h) {
            const Eigen::Index r0 = b * block;
            const Eigen::Index c0 = h * dk;
            out.block(r0, c0, block, dk) = scaled_dot_attention(q.block(r0, c0, block, dk), k.block(r0, c0, block, dk),
                                                                v.block(r0, c0, block, dk));
        }
    }
    return out;
}

Matrix blocked_attention_forward(const Matrix& q, const Matrix& k, const Matrix& v, Eigen::Index block, Eigen::Index heads,
                                 std::vector<Matrix>* weights) {
    check_blocks(q, k, v, block, heads);
    const Eigen::Index dk = q.cols() / heads;
    const Eigen::Index cells = (q.rows() / block) * heads;
    Matrix out(q.rows(), q.cols());
    if (weights != nullptr) weights->assign(static_cast<std::size_t>(cells), Matrix());
#pragma omp parallel for schedule(static)
    for (Eigen::Index c = 0; c < cells; ++c) {
        const Eigen::Index b = c / heads;
        const Eigen::Index h = c % heads;
        attend_cell(q, k, v, b * block, h * dk, block, dk, out,
                    weights != nullptr ? &(*weights)[static_cast<std::size_t>(c)] : nullptr);
    }
    return out;
}

ad::Var blocked_attention(ad::Var q, ad::Var k, ad::Var v, Eigen::Index block, Eigen::Index heads, AttentionProbe* probe) {
    std::vector<Matrix> weights;
    Matrix out = blocked_attention_forward(q.value(), k.value(), v.value(), block, heads, &weights);
    if (probe != nullptr) probe->weights.insert(probe->weights.end(), weights.begin(), weights.end());
    const ad::Var in[] = {q, k, v};
    return q.tape()->record(std::move(out), in, [q, k, v, block, heads, weights = std::move(weights)](ad::Tape& t, std::size_t self) {
        const Matrix& qv = t.value(q.id());
        const Matrix& kv = t.value(k.id());
        const Matrix& vv = t.value(v.id());
        const Matrix& g = t.grad(self);
        const Eigen::Index dk = qv.cols() / heads;
        const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
        Matrix gq = Matrix::Zero(qv.rows(), qv.cols());
        Matrix gk = Matrix::Zero(qv.rows(), qv.cols());
        Matrix gv = Matrix::Zero(qv.rows(), qv.cols());
        const auto cells = static_cast<Eigen::Index>(weights.size());
#pragma omp parallel for schedule(static)
        for (Eigen::Index c = 0; c < cells; ++c) {
            const Eigen::Index r0 = (c / heads) * block;
            const Eigen::Index c0 = (c % heads) * dk;
            const Matrix& a = weights[static_cast<std::size_t>(c)];
            const auto go = g.block(r0, c0, block, dk);
            gv.block(r0, c0, block, dk).noalias() = a.transpose() * go;
            Matrix ga = go * vv.block(r0, c0, block, dk).transpose();
            const Eigen::VectorXd dot = ga.cwiseProduct(a).rowwise().sum();
            Matrix gs = a.cwiseProduct(ga.colwise() - dot) * scale;
            gq.block(r0, c0, block, dk).noalias() = gs * kv.block(r0, c0, block, dk);
            gk.block(r0, c0, block, dk).noalias() = gs.transpose() * qv.block(r0, c0, block, dk);
        }
        if (t.needs_grad(q.id())) t.grad(q.id()) += gq;
        if (t.needs_grad(k.id())) t.grad(k.id()) += gk;
        if (t.needs_grad(v.id())) t.grad(v.id()) += gv;
    });
}

MultiHeadAttention::MultiHeadAttention(ad::ParameterSet& params, const std::string& name, const EncoderConfig& config,
                                       std::mt19937_64& rng)
    : query_(params, name + ".query", config.d_model, config.d_model, rng),
      key_(params, name + ".key", config.d_model, config.d_model, rng),
      value_(params, name + ".value", config.d_model, config.d_model, rng),
      output_(params, name + ".output", config.d_model, config.d_model, rng),
      heads_(config.heads) {}

ad::Var MultiHeadAttention::operator()(ad::Tape& tape, ad::Var x, Eigen::Index block, AttentionProbe* probe) const {
    return output_(tape, blocked_attention(query_(tape, x), key_(tape, x), value_(tape, x), block, heads_, probe));
}

EncoderLayer::EncoderLayer(ad::ParameterSet& params, const std::string& name, const EncoderConfig& config,
                           std::mt19937_64& rng)
    : attention_(params, name + ".attention", config, rng),
      norm1_(params, name + ".norm1", config.d_model, config.eps),
      norm2_(params, name + ".norm2", config.d_model, config.eps),
      ff1_(params, name + ".ff1", config.d_model, config.d_ff, rng),
      ff2_(params, name + ".ff2", config.d_ff, config.d_model, rng),
      dropout_rate_(config.dropout_rate) {}

ad::Var EncoderLayer::operator()(ad::Tape& tape, ad::Var x, Eigen::Index block, bool training, std::mt19937_64& rng,
                                 AttentionProbe* probe) const {
    ad::Var attended = ad::dropout(attention_(tape, x, block, probe), dropout_rate_, training, rng);
    ad::Var h = norm1_(tape, ad::add(x, attended));
    ad::Var ff = ad::dropout(ff2_(tape, ad::relu(ff1_(tape, h))), dropout_rate_, training, rng);
    return norm2_(tape, ad::add(h, ff));
}

TemporalEncoder::TemporalEncoder(ad::ParameterSet& params, const std::string& name, const EncoderConfig& config,
                                 std::mt19937_64& rng)
    : config_(config) {
    config_.validate();
    layers_.reserve(config_.layers);
    for (std::size_t l = 0; l < config_.layers; ++l) {
        layers_.emplace_back(params, name + ".layer" + std::to_string(l), config_, rng);
    }
}

ad::Var TemporalEncoder::operator()(ad::Tape& tape, ad::Var x, Eigen::Index block, bool training, std::mt19937_64& rng,
                                    AttentionProbe* probe) const {
    if (x.cols() != config_.d_model) throw ConfigError("encoder input width must equal d_model");
    if (block > config_.max_len) throw ConfigError("sequence length exceeds encoder.max_len");
    for (const auto& layer : layers_) {
        x = layer(tape, x, block, training, rng, probe);
    }
    return x;
}

ad::Var add_positional_encoding(ad::Var x, Eigen::Index block) {
    if (block < 1 || x.rows() % block != 0) throw InputError("positional encoding: rows must be a multiple of the block length");
    const Matrix pe = positional_encoding(block, x.cols());
    Matrix tiled(x.rows(), x.cols());
    for (Eigen::Index b = 0; b < x.rows() / block; ++b) {
        tiled.middleRows(b * block, block) = pe;
    }
    return ad::add_constant(x, tiled);
}

}  // namespace fgatt::temporal
