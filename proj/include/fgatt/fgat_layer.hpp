#pragma once
// Fuzzy graph attention block: single-head graph attention over a dynamic
// graph, wrapped with dropout, a residual connection and post-norm.
//
// Two evaluation paths exist:
//   * reference functions on plain matrices (attention_coefficients,
//     gat_aggregate, layer_norm) - straightforward loops, used as test oracles;
//   * the tape op graph_attention(), which batches many graphs into one
//     row-stacked matrix and runs its forward/backward kernels under OpenMP.

#include "fgatt/autodiff.hpp"
#include "fgatt/graph_builder.hpp"
#include "fgatt/layers.hpp"

#include <map>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace fgatt::fgat {

struct FgatBlockParams {
    Matrix weight;     // d_in x d_out
    RowVector attention;  // 2 * d_out: [source half | neighbor half]
    RowVector gamma;   // d_out
    RowVector beta;    // d_out
    double dropout_rate = 0.1;
    double leaky_slope = 0.01;
    double eps = 1e-5;

    void validate() const;
};

/// Softmax-normalised attention weight per directed edge (i, j).
using AttentionCoefficients = std::map<std::pair<std::size_t, std::size_t>, double>;

AttentionCoefficients attention_coefficients(const Matrix& features, const graph::DynamicGraph& graph,
                                             const FgatBlockParams& params);

/// h'_i = LeakyReLU(sum_j alpha_ij W h_j). Serial reference.
Matrix gat_aggregate(const Matrix& features, const graph::DynamicGraph& graph, const FgatBlockParams& params);

/// (x - mean) / sqrt(var + eps) * gamma + beta over one feature vector (population variance).
Vector layer_norm(const Vector& x, const Vector& gamma, const Vector& beta, double eps);

/// layer_norm(h + dropout(gat_aggregate(h))) for one graph, evaluated through the tape kernels.
Matrix fgat_block(const Matrix& features, const graph::DynamicGraph& graph, const FgatBlockParams& params, bool training,
                  std::mt19937_64& rng);

/// Neighbor lists over a row-stacked batch of graphs: rows are split into
/// consecutive groups of `group_size` nodes and every group carries its own graph.
struct NeighborIndex {
    std::size_t group_size = 0;
    std::vector<std::size_t> row_ptr;  // rows + 1
    std::vector<std::size_t> col;      // global row ids, always inside the source row's group

    std::size_t rows() const noexcept { return row_ptr.empty() ? 0 : row_ptr.size() - 1; }
    std::size_t groups() const noexcept { return group_size == 0 ? 0 : rows() / group_size; }
};

/// group_graphs[g] describes group g. Throws StructuralError for a node without neighbors.
NeighborIndex make_neighbor_index(std::span<const graph::DynamicGraph* const> group_graphs);

/// Per-edge intermediates of the attention forward pass, aligned with NeighborIndex::col.
struct AttentionState {
    std::vector<double> logits;   // pre-activation a . [z_i | z_j]
    std::vector<double> weights;  // softmax over each neighborhood
};

/// out_i = sum_j alpha_ij z_j with alpha from LeakyReLU scores. Serial reference kernel.
Matrix graph_attention_forward_serial(const Matrix& projected, const RowVector& attention, const NeighborIndex& index,
                                      double slope, AttentionState* state = nullptr);

/// OpenMP kernel over groups; bitwise identical to the serial kernel.
Matrix graph_attention_forward(const Matrix& projected, const RowVector& attention, const NeighborIndex& index,
                               double slope, AttentionState* state = nullptr);

/// Tape op wrapping the kernels. `projected` is rows x d, `attention` is 1 x 2d.
ad::Var graph_attention(ad::Var projected, ad::Var attention, const NeighborIndex& index, double slope);

/// Trainable FGAT block for the models.
class FgatBlock {
public:
    FgatBlock() = default;
    FgatBlock(ad::ParameterSet& params, const std::string& name, Eigen::Index dim, double dropout_rate, double leaky_slope,
              double eps, std::mt19937_64& rng);

    ad::Var operator()(ad::Tape& tape, ad::Var h, const NeighborIndex& index, bool training, std::mt19937_64& rng) const;

    /// Plain copy of the current parameters.
    FgatBlockParams params() const;

private:
    nn::Linear project_;
    ad::Parameter* attention_ = nullptr;
    nn::LayerNorm norm_;
    double dropout_rate_ = 0.1;
    double leaky_slope_ = 0.01;
};

}  // namespace fgatt::fgat
