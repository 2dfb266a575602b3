#include "fgatt/fgat_layer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fgatt::fgat {

void FgatBlockParams::validate() const {
    const Eigen::Index d_out = weight.cols();
    if (attention.size() != 2 * d_out) throw ConfigError("attention vector must have length 2 * d_out");
    if (gamma.size() != d_out || beta.size() != d_out) throw ConfigError("normalization parameters must have length d_out");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout_rate must lie in [0, 1)");
    if (!(leaky_slope > 0.0)) throw ConfigError("leaky_slope must be positive");
    if (!(eps > 0.0)) throw ConfigError("eps must be positive");
    if (!weight.allFinite() || !attention.allFinite() || !gamma.allFinite() || !beta.allFinite()) {
        throw ConfigError("FGAT parameters must be finite");
    }
}

namespace {

double leaky(double v, double slope) {
    return v > 0.0 ? v : slope * v;
}

void check_features(const Matrix& features, const graph::DynamicGraph& graph, const FgatBlockParams& params) {
    params.validate();
    if (static_cast<std::size_t>(features.rows()) != graph.node_count()) {
        throw InputError("feature rows must equal the graph's node count");
    }
    if (features.cols() != params.weight.rows()) throw InputError("feature width must equal d_in");
    if (!features.allFinite()) throw InputError("features must be finite");
}

}  // namespace

AttentionCoefficients attention_coefficients(const Matrix& features, const graph::DynamicGraph& graph,
                                             const FgatBlockParams& params) {
    check_features(features, graph, params);
    const Matrix z = features * params.weight;
    const Eigen::Index d = z.cols();
    AttentionCoefficients out;
    for (std::size_t i = 0; i < graph.node_count(); ++i) {
        const auto nbrs = graph.neighbors(i);
        if (nbrs.empty()) throw StructuralError("node " + std::to_string(i) + " has an empty neighborhood");
        std::vector<double> e;
        for (std::size_t j : nbrs) {
            double s = 0.0;
            for (Eigen::Index c = 0; c < d; ++c) {
                s += params.attention(c) * z(static_cast<Eigen::Index>(i), c);
                s += params.attention(d + c) * z(static_cast<Eigen::Index>(j), c);
            }
            e.push_back(leaky(s, params.leaky_slope));
        }
        const double m = *std::max_element(e.begin(), e.end());
        double total = 0.0;
        for (double& v : e) {
            v = std::exp(v - m);
            total += v;
        }
        for (std::size_t k = 0; k < nbrs.size(); ++k) {
            out[{i, nbrs[k]}] = e[k] / total;
        }
    }
    return out;
}

Matrix gat_aggregate(const Matrix& features, const graph::DynamicGraph& graph, const FgatBlockParams& params) {
    const auto alpha = attention_coefficients(features, graph, params);
    const Matrix z = features * params.weight;
    Matrix out = Matrix::Zero(z.rows(), z.cols());
    for (const auto& [edge, a] : alpha) {
        out.row(static_cast<Eigen::Index>(edge.first)) += a * z.row(static_cast<Eigen::Index>(edge.second));
    }
    return out.unaryExpr([slope = params.leaky_slope](double v) { return leaky(v, slope); });
}

Vector layer_norm(const Vector& x, const Vector& gamma, const Vector& beta, double eps) {
    if (x.size() < 1) throw InputError("layer_norm needs at least one feature");
    if (gamma.size() != x.size() || beta.size() != x.size()) throw InputError("layer_norm parameter length mismatch");
    const double mu = x.mean();
    const double var = (x.array() - mu).square().mean();
    return ((x.array() - mu) / std::sqrt(var + eps) * gamma.array() + beta.array()).matrix();
}

NeighborIndex make_neighbor_index(std::span<const graph::DynamicGraph* const> group_graphs) {
    NeighborIndex index;
    if (group_graphs.empty()) return index;
    index.group_size = group_graphs.front()->node_count();
    index.row_ptr.reserve(group_graphs.size() * index.group_size + 1);
    index.row_ptr.push_back(0);
    for (std::size_t g = 0; g < group_graphs.size(); ++g) {
        const auto& graph = *group_graphs[g];
        if (graph.node_count() != index.group_size) throw InputError("all graphs in a batch must have the same node count");
        const std::size_t base = g * index.group_size;
        for (std::size_t i = 0; i < index.group_size; ++i) {
            const auto nbrs = graph.neighbors(i);
            if (nbrs.empty()) throw StructuralError("node " + std::to_string(i) + " has an empty neighborhood");
            for (std::size_t j : nbrs) index.col.push_back(base + j);
            index.row_ptr.push_back(index.col.size());
        }
    }
    return index;
}

namespace {

void check_index(const Matrix& projected, const RowVector& attention, const NeighborIndex& index) {
    if (static_cast<std::size_t>(projected.rows()) != index.rows()) throw InputError("neighbor index does not match row count");
    if (attention.size() != 2 * projected.cols()) throw InputError("attention vector must have length 2 * d");
}

// Forward pass for rows [begin, end). Writes only rows and edges of that range.
void attend_rows(const Matrix& z, const RowVector& attention, const NeighborIndex& index, double slope, std::size_t begin,
                 std::size_t end, Matrix& out, AttentionState& state) {
    const Eigen::Index d = z.cols();
    const auto a_self = attention.head(d);
    const auto a_nbr = attention.tail(d);
    for (std::size_t i = begin; i < end; ++i) {
        const auto ri = static_cast<Eigen::Index>(i);
        const double self_term = z.row(ri).dot(a_self);
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t e = index.row_ptr[i]; e < index.row_ptr[i + 1]; ++e) {
            const double s = self_term + z.row(static_cast<Eigen::Index>(index.col[e])).dot(a_nbr);
            state.logits[e] = s;
            m = std::max(m, leaky(s, slope));
        }
        double total = 0.0;
        for (std::size_t e = index.row_ptr[i]; e < index.row_ptr[i + 1]; ++e) {
            const double w = std::exp(leaky(state.logits[e], slope) - m);
            state.weights[e] = w;
            total += w;
        }
        out.row(ri).setZero();
        for (std::size_t e = index.row_ptr[i]; e < index.row_ptr[i + 1]; ++e) {
            state.weights[e] /= total;
            out.row(ri) += state.weights[e] * z.row(static_cast<Eigen::Index>(index.col[e]));
        }
    }
}

// Backward pass for rows [begin, end); neighbor gradients stay inside the group.
void attend_rows_backward(const Matrix& z, const RowVector& attention, const NeighborIndex& index, double slope,
                          const AttentionState& state, const Matrix& grad_out, std::size_t begin, std::size_t end,
                          Matrix& grad_z, RowVector& grad_attention) {
    const Eigen::Index d = z.cols();
    const auto a_self = attention.head(d);
    const auto a_nbr = attention.tail(d);
    for (std::size_t i = begin; i < end; ++i) {
        const auto ri = static_cast<Eigen::Index>(i);
        const auto g = grad_out.row(ri);
        double weighted = 0.0;
        for (std::size_t e = index.row_ptr[i]; e < index.row_ptr[i + 1]; ++e) {
            weighted += state.weights[e] * g.dot(z.row(static_cast<Eigen::Index>(index.col[e])));
        }
        for (std::size_t e = index.row_ptr[i]; e < index.row_ptr[i + 1]; ++e) {
            const auto rj = static_cast<Eigen::Index>(index.col[e]);
            const double w = state.weights[e];
            const double d_weight = g.dot(z.row(rj));
            const double d_logit = w * (d_weight - weighted) * (state.logits[e] > 0.0 ? 1.0 : slope);
            grad_z.row(rj) += w * g + d_logit * a_nbr;
            grad_z.row(ri) += d_logit * a_self;
            grad_attention.head(d) += d_logit * z.row(ri);
            grad_attention.tail(d) += d_logit * z.row(rj);
        }
    }
}

}  // namespace

Matrix graph_attention_forward_serial(const Matrix& projected, const RowVector& attention, const NeighborIndex& index,
                                      double slope, AttentionState* state) {
    check_index(projected, attention, index);
    AttentionState local;
    AttentionState& st = state != nullptr ? *state : local;
    st.logits.assign(index.col.size(), 0.0);
    st.weights.assign(index.col.size(), 0.0);
    Matrix out(projected.rows(), projected.cols());
    attend_rows(projected, attention, index, slope, 0, index.rows(), out, st);
    return out;
}

Matrix graph_attention_forward(const Matrix& projected, const RowVector& attention, const NeighborIndex& index,
                               double slope, AttentionState* state) {
    check_index(projected, attention, index);
    AttentionState local;
    AttentionState& st = state != nullptr ? *state : local;
    st.logits.assign(index.col.size(), 0.0);
    st.weights.assign(index.col.size(), 0.0);
    Matrix out(projected.rows(), projected.cols());
    const auto groups = static_cast<std::ptrdiff_t>(index.groups());
    const std::size_t gs = index.group_size;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t g = 0; g < groups; ++g) {
        const auto begin = static_cast<std::size_t>(g) * gs;
        attend_rows(projected, attention, index, slope, begin, begin + gs, out, st);
    }
    return out;
}

ad::Var graph_attention(ad::Var projected, ad::Var attention, const NeighborIndex& index, double slope) {
    if (attention.rows() != 1) throw InputError("attention parameter must be a row vector");
    AttentionState state;
    const RowVector a = attention.value().row(0);
    Matrix out = graph_attention_forward(projected.value(), a, index, slope, &state);
    const ad::Var in[] = {projected, attention};
    return projected.tape()->record(
        std::move(out), in, [projected, attention, index, slope, state = std::move(state)](ad::Tape& t, std::size_t self) {
            const Matrix& z = t.value(projected.id());
            const RowVector a = t.value(attention.id()).row(0);
            const Matrix& g = t.grad(self);
            const auto groups = static_cast<std::ptrdiff_t>(index.groups());
            const std::size_t gs = index.group_size;
            Matrix grad_z = Matrix::Zero(z.rows(), z.cols());
            std::vector<RowVector> partial(static_cast<std::size_t>(groups), RowVector::Zero(a.size()));
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t grp = 0; grp < groups; ++grp) {
                const auto begin = static_cast<std::size_t>(grp) * gs;
                attend_rows_backward(z, a, index, slope, state, g, begin, begin + gs, grad_z,
                                     partial[static_cast<std::size_t>(grp)]);
            }
            if (t.needs_grad(projected.id())) t.grad(projected.id()) += grad_z;
            if (t.needs_grad(attention.id())) {
                RowVector total = RowVector::Zero(a.size());
                for (const auto& p : partial) total += p;
                t.grad(attention.id()).row(0) += total;
            }
        });
}

FgatBlock::FgatBlock(ad::ParameterSet& params, const std::string& name, Eigen::Index dim, double dropout_rate,
                     double leaky_slope, double eps, std::mt19937_64& rng)
    : project_(params, name + ".project", dim, dim, rng, false),
      attention_(&params.add(name + ".attention", nn::glorot(1, 2 * dim, rng))),
      norm_(params, name + ".norm", dim, eps),
      dropout_rate_(dropout_rate),
      leaky_slope_(leaky_slope) {}

ad::Var FgatBlock::operator()(ad::Tape& tape, ad::Var h, const NeighborIndex& index, bool training,
                              std::mt19937_64& rng) const {
    ad::Var z = project_(tape, h);
    ad::Var agg = ad::leaky_relu(graph_attention(z, tape.parameter(*attention_), index, leaky_slope_), leaky_slope_);
    return norm_(tape, ad::add(h, ad::dropout(agg, dropout_rate_, training, rng)));
}

FgatBlockParams FgatBlock::params() const {
    FgatBlockParams p;
    p.weight = project_.weight().value;
    p.attention = attention_->value.row(0);
    p.gamma = norm_.gamma().value.row(0);
    p.beta = norm_.beta().value.row(0);
    p.dropout_rate = dropout_rate_;
    p.leaky_slope = leaky_slope_;
    p.eps = norm_.eps();
    return p;
}

Matrix fgat_block(const Matrix& features, const graph::DynamicGraph& graph, const FgatBlockParams& params, bool training,
                  std::mt19937_64& rng) {
    check_features(features, graph, params);
    if (params.weight.rows() != params.weight.cols()) {
        throw ConfigError("fgat_block needs d_in == d_out for the residual connection");
    }
    const graph::DynamicGraph* graphs[] = {&graph};
    const NeighborIndex index = make_neighbor_index(graphs);
    ad::Tape tape;
    ad::Var h = tape.constant(features);
    ad::Var z = ad::matmul(h, tape.constant(params.weight));
    ad::Var agg = ad::leaky_relu(graph_attention(z, tape.constant(params.attention), index, params.leaky_slope),
                                 params.leaky_slope);
    ad::Var out = ad::layer_norm_rows(ad::add(h, ad::dropout(agg, params.dropout_rate, training, rng)),
                                      tape.constant(params.gamma), tape.constant(params.beta), params.eps);
    return out.value();
}

}  // namespace fgatt::fgat
