#include "fgatt/graph_builder.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

namespace fgatt::graph {

Pooling parse_pooling(std::string_view name) {
    if (name == "mean") return Pooling::mean;
    if (name == "max") return Pooling::max;
    throw ConfigError("unknown pooling method '" + std::string(name) + "' (expected mean or max)");
}

std::string_view to_string(Pooling p) noexcept {
    return p == Pooling::mean ? "mean" : "max";
}

void GraphConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("graph.alpha must lie in [0, 1]");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("graph.sigma must be positive");
    if (k < 1) throw ConfigError("graph.k must be >= 1");
}

DynamicGraph::DynamicGraph(std::size_t node_count, std::vector<Edge> edges, std::size_t built_from)
    : node_count_(node_count), built_from_(built_from), edges_(std::move(edges)), offsets_(node_count + 1, 0) {
    for (const auto& e : edges_) {
        if (e.source >= node_count_ || e.target >= node_count_) {
            throw StructuralError("edge endpoint out of range");
        }
        if (e.source == e.target) {
            throw StructuralError("dynamic graphs may not contain self-loops");
        }
        ++offsets_[e.source + 1];
    }
    std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
    targets_.resize(edges_.size());
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (const auto& e : edges_) {
        targets_[cursor[e.source]++] = e.target;
    }
}

std::span<const std::size_t> DynamicGraph::neighbors(std::size_t node) const {
    if (node >= node_count_) throw InputError("node index out of range");
    return std::span<const std::size_t>(targets_).subspan(offsets_[node], offsets_[node + 1] - offsets_[node]);
}

namespace {

void check_alpha(double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ConfigError("score balance alpha must lie in [0, 1]");
    }
}

Matrix kernel_matrix(const Matrix& features, const fuzzy::Kernel& k) {
    const Eigen::Index n = features.rows();
    Matrix r(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        r(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = k.from_squared_distance((features.row(i) - features.row(j)).squaredNorm());
            r(i, j) = v;
            r(j, i) = v;
        }
    }
    return r;
}

// inclusion(i, j) = inf_y max(1 - R(i, y), R(y, j)): the lower approximation of
// x_i with respect to the similarity class of node j.
void fill_inclusion_row(const Matrix& r, Eigen::Index i, Matrix& inclusion) {
    const Eigen::Index n = r.rows();
    for (Eigen::Index j = 0; j < n; ++j) {
        double inf = std::numeric_limits<double>::infinity();
        for (Eigen::Index y = 0; y < n; ++y) {
            inf = std::min(inf, std::max(1.0 - r(i, y), r(y, j)));
        }
        inclusion(i, j) = inf;
    }
}

Matrix combine(const Matrix& inclusion, double alpha) {
    return alpha * inclusion + (1.0 - alpha) * inclusion.transpose();
}

Matrix as_features(const Matrix& window_values, Eigen::Index t) {
    return window_values.row(t).transpose();
}

}  // namespace

double score_at_t(const Matrix& features_t, std::size_t i, std::size_t j, double alpha, const fuzzy::Kernel& k) {
    check_alpha(alpha);
    const auto n = static_cast<std::size_t>(features_t.rows());
    if (i >= n || j >= n) throw InputError("node index out of range");
    std::vector<std::vector<double>> samples(n);
    for (std::size_t y = 0; y < n; ++y) {
        const auto row = features_t.row(static_cast<Eigen::Index>(y));
        samples[y].assign(row.data(), row.data() + row.size());
    }
    const fuzzy::Universe u(std::move(samples));
    const auto d_i = fuzzy::similarity_class(u[i], u, k);
    const auto d_j = fuzzy::similarity_class(u[j], u, k);
    return alpha * fuzzy::fuzzy_lower_approx(u[i], d_j, u, k) + (1.0 - alpha) * fuzzy::fuzzy_lower_approx(u[j], d_i, u, k);
}

Matrix score_matrix(const Matrix& features_t, double alpha, const fuzzy::Kernel& k) {
    check_alpha(alpha);
    if (features_t.rows() == 0) throw InputError("score matrix needs at least one node");
    const Matrix r = kernel_matrix(features_t, k);
    Matrix inclusion(r.rows(), r.cols());
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
        fill_inclusion_row(r, i, inclusion);
    }
    return combine(inclusion, alpha);
}

ScoreTensor score_tensor_serial(const Matrix& window_values, double alpha, const fuzzy::Kernel& k) {
    check_alpha(alpha);
    if (window_values.rows() == 0) throw InputError("window has an empty time axis");
    ScoreTensor out;
    out.scores.reserve(static_cast<std::size_t>(window_values.rows()));
    for (Eigen::Index t = 0; t < window_values.rows(); ++t) {
        out.scores.push_back(score_matrix(as_features(window_values, t), alpha, k));
    }
    return out;
}

ScoreTensor score_tensor(const Matrix& window_values, double alpha, const fuzzy::Kernel& k) {
    check_alpha(alpha);
    const Eigen::Index steps = window_values.rows();
    const Eigen::Index n = window_values.cols();
    if (steps == 0) throw InputError("window has an empty time axis");
    std::vector<Matrix> kernels(static_cast<std::size_t>(steps));
    std::vector<Matrix> inclusion(static_cast<std::size_t>(steps), Matrix(n, n));
    for (Eigen::Index t = 0; t < steps; ++t) {
        kernels[static_cast<std::size_t>(t)] = kernel_matrix(as_features(window_values, t), k);
    }
    const Eigen::Index work = steps * n;
#pragma omp parallel for schedule(static) if (work >= 64)
    for (Eigen::Index w = 0; w < work; ++w) {
        const auto t = static_cast<std::size_t>(w / n);
        fill_inclusion_row(kernels[t], w % n, inclusion[t]);
    }
    ScoreTensor out;
    out.scores.reserve(static_cast<std::size_t>(steps));
    for (const auto& inc : inclusion) {
        out.scores.push_back(combine(inc, alpha));
    }
    return out;
}

Matrix pool_scores(const ScoreTensor& scores, Pooling method) {
    if (scores.steps() == 0) throw InputError("cannot pool an empty time axis");
    Matrix pooled = scores.scores.front();
    for (std::size_t t = 1; t < scores.steps(); ++t) {
        if (scores.scores[t].rows() != pooled.rows() || scores.scores[t].cols() != pooled.cols()) {
            throw InputError("score matrices differ in shape across time");
        }
        if (method == Pooling::mean) {
            pooled += scores.scores[t];
        } else {
            pooled = pooled.cwiseMax(scores.scores[t]);
        }
    }
    if (method == Pooling::mean) {
        pooled /= static_cast<double>(scores.steps());
    }
    return pooled;
}

namespace {

void check_pooled(const Matrix& pooled, std::size_t k) {
    if (pooled.rows() != pooled.cols()) throw InputError("pooled score matrix must be square");
    if (pooled.rows() < 2) throw InputError("graph construction needs at least two nodes");
    if (k < 1) throw ConfigError("top-K requires K >= 1");
}

// Descending score, ascending index on ties.
bool stronger(double wa, std::size_t a, double wb, std::size_t b) {
    if (wa != wb) return wa > wb;
    return a < b;
}

}  // namespace

DynamicGraph build_graph(const Matrix& pooled, std::size_t k, std::size_t built_from) {
    check_pooled(pooled, k);
    const auto n = static_cast<std::size_t>(pooled.rows());
    const std::size_t keep = std::min(k, n - 1);
    std::vector<Edge> edges;
    edges.reserve(n * keep);
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < n; ++i) {
        candidates.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) candidates.push_back(j);
        }
        const auto row = pooled.row(static_cast<Eigen::Index>(i));
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                          [&](std::size_t a, std::size_t b) { return stronger(row(a), a, row(b), b); });
        for (std::size_t c = 0; c < keep; ++c) {
            edges.push_back({i, candidates[c], row(candidates[c])});
        }
    }
    return DynamicGraph(n, std::move(edges), built_from);
}

DynamicGraph build_graph_global(const Matrix& pooled, std::size_t k, std::size_t built_from) {
    check_pooled(pooled, k);
    const auto n = static_cast<std::size_t>(pooled.rows());
    std::vector<Edge> all;
    all.reserve(n * (n - 1));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) all.push_back({i, j, pooled(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
        }
    }
    const std::size_t keep = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), [](const Edge& a, const Edge& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        if (a.source != b.source) return a.source < b.source;
        return a.target < b.target;
    });
    all.resize(keep);
    std::stable_sort(all.begin(), all.end(), [](const Edge& a, const Edge& b) { return a.source < b.source; });
    return DynamicGraph(n, std::move(all), built_from);
}

DynamicGraph construct_window_graph(const MaskedWindow& window, const GraphConfig& config) {
    config.validate();
    const fuzzy::Kernel kernel(config.sigma);
    const Matrix pooled = pool_scores(score_tensor(window.values, config.alpha, kernel), config.pooling);
    return config.global_top_k ? build_graph_global(pooled, config.k, window.window_id)
                               : build_graph(pooled, config.k, window.window_id);
}

void write_edge_list_csv(const DynamicGraph& graph, std::ostream& out) {
    out << "source,target,weight\n";
    out << std::setprecision(17);
    for (const auto& e : graph.edges()) {
        out << e.source << ',' << e.target << ',' << e.weight << '\n';
    }
}

}  // namespace fgatt::graph
