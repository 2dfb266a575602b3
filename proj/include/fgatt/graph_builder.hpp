#pragma once
// Dynamic graph construction: per-timestep fuzzy-rough connectivity scores,
// temporal pooling, and per-node top-K sparsification without self-loops.

#include "fgatt/common.hpp"
#include "fgatt/fuzzy_rough.hpp"
#include "fgatt/window.hpp"

#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace fgatt::graph {

enum class Pooling { mean, max };

Pooling parse_pooling(std::string_view name);
std::string_view to_string(Pooling p) noexcept;

struct GraphConfig {
    double alpha = 0.5;  // balance between the two inclusion degrees
    double sigma = 1.0;  // kernel bandwidth
    std::size_t k = 8;   // retained neighbors per node
    Pooling pooling = Pooling::mean;
    bool global_top_k = false;  // keep the K best edges overall instead of per node

    void validate() const;
};

/// T stacked N x N score matrices. Diagonals are computed but ignored downstream.
struct ScoreTensor {
    std::vector<Matrix> scores;

    std::size_t steps() const noexcept { return scores.size(); }
    std::size_t node_count() const noexcept { return scores.empty() ? 0 : static_cast<std::size_t>(scores.front().rows()); }
};

struct Edge {
    std::size_t source = 0;
    std::size_t target = 0;
    double weight = 0.0;

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Directed edge i -> j means j feeds node i's aggregation.
class DynamicGraph {
public:
    DynamicGraph() = default;
    DynamicGraph(std::size_t node_count, std::vector<Edge> edges, std::size_t built_from = 0);

    std::size_t node_count() const noexcept { return node_count_; }
    std::size_t built_from() const noexcept { return built_from_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }

    /// Neighbors of `node` in retained order (descending score).
    std::span<const std::size_t> neighbors(std::size_t node) const;
    std::size_t out_degree(std::size_t node) const { return neighbors(node).size(); }

private:
    std::size_t node_count_ = 0;
    std::size_t built_from_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::size_t> offsets_;
    std::vector<std::size_t> targets_;
};

/// Score^t(i, j) evaluated directly from the fuzzy-rough operators.
/// `features_t` holds one row per node.
double score_at_t(const Matrix& features_t, std::size_t i, std::size_t j, double alpha, const fuzzy::Kernel& k);

/// Full N x N score matrix for one timestep.
Matrix score_matrix(const Matrix& features_t, double alpha, const fuzzy::Kernel& k);

/// Scores for every timestep of a T x N scalar-per-node window. Serial reference.
ScoreTensor score_tensor_serial(const Matrix& window_values, double alpha, const fuzzy::Kernel& k);

/// Same result as score_tensor_serial, parallelized over (t, i) with OpenMP.
ScoreTensor score_tensor(const Matrix& window_values, double alpha, const fuzzy::Kernel& k);

Matrix pool_scores(const ScoreTensor& scores, Pooling method);

/// Per-node top-K (ties to the lower node index) over off-diagonal entries.
DynamicGraph build_graph(const Matrix& pooled, std::size_t k, std::size_t built_from = 0);

/// Global top-K variant: the K strongest off-diagonal pairs overall.
DynamicGraph build_graph_global(const Matrix& pooled, std::size_t k, std::size_t built_from = 0);

/// Scores -> pooling -> sparsification for one masked window.
DynamicGraph construct_window_graph(const MaskedWindow& window, const GraphConfig& config);

/// Edge list as `source,target,weight` CSV with a header row.
void write_edge_list_csv(const DynamicGraph& graph, std::ostream& out);

}  // namespace fgatt::graph
