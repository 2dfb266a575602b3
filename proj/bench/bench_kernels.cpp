// Serial reference kernels against their OpenMP counterparts on model-sized inputs.
// Run with OMP_NUM_THREADS set to the number of cores you want to measure.

#include "fgatt/fgat_layer.hpp"
#include "fgatt/graph_builder.hpp"
#include "fgatt/temporal_encoder.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace fgatt;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    return m;
}

// Window of T steps over N nodes, the graph builder's input.
template <bool Parallel>
void score_tensor_bench(benchmark::State& state) {
    const auto nodes = static_cast<Eigen::Index>(state.range(0));
    const Matrix window = random_matrix(16, nodes, 1).array().abs();
    const fuzzy::Kernel kernel(0.5);
    for (auto _ : state) {
        auto scores = Parallel ? graph::score_tensor(window, 0.5, kernel) : graph::score_tensor_serial(window, 0.5, kernel);
        benchmark::DoNotOptimize(scores.scores.data());
    }
}

// One FGAT aggregation over a batch of 32 windows x 16 steps, K = 8 neighbors per node.
template <bool Parallel>
void graph_attention_bench(benchmark::State& state) {
    const auto nodes = static_cast<std::size_t>(state.range(0));
    const std::size_t groups = 32 * 16;
    const Eigen::Index dim = 32;
    std::mt19937_64 rng(2);
    std::vector<graph::Edge> edges;
    for (std::size_t i = 0; i < nodes; ++i) {
        for (std::size_t r = 1; r <= std::min<std::size_t>(8, nodes - 1); ++r) edges.push_back({i, (i + r) % nodes, 1.0});
    }
    const graph::DynamicGraph g(nodes, edges);
    std::vector<const graph::DynamicGraph*> ptrs(groups, &g);
    const auto index = fgat::make_neighbor_index(ptrs);
    const Matrix projected = random_matrix(static_cast<Eigen::Index>(groups * nodes), dim, 3);
    const RowVector attention = random_matrix(1, 2 * dim, 4);
    for (auto _ : state) {
        Matrix out = Parallel ? fgat::graph_attention_forward(projected, attention, index, 0.01)
                              : fgat::graph_attention_forward_serial(projected, attention, index, 0.01);
        benchmark::DoNotOptimize(out.data());
    }
}

// Temporal self-attention over every node sequence of a batch: blocks of 16 steps, 4 heads.
template <bool Parallel>
void blocked_attention_bench(benchmark::State& state) {
    const auto sequences = static_cast<Eigen::Index>(state.range(0));
    const Eigen::Index rows = sequences * 16, d = 32;
    const Matrix q = random_matrix(rows, d, 5), k = random_matrix(rows, d, 6), v = random_matrix(rows, d, 7);
    for (auto _ : state) {
        Matrix out = Parallel ? temporal::blocked_attention_forward(q, k, v, 16, 4) : temporal::blocked_attention_serial(q, k, v, 16, 4);
        benchmark::DoNotOptimize(out.data());
    }
}

}  // namespace

BENCHMARK(score_tensor_bench<false>)->Name("score_tensor/serial")->Arg(12)->Arg(64);
BENCHMARK(score_tensor_bench<true>)->Name("score_tensor/openmp")->Arg(12)->Arg(64);
BENCHMARK(graph_attention_bench<false>)->Name("graph_attention/serial")->Arg(12)->Arg(64);
BENCHMARK(graph_attention_bench<true>)->Name("graph_attention/openmp")->Arg(12)->Arg(64);
BENCHMARK(blocked_attention_bench<false>)->Name("blocked_attention/serial")->Arg(96)->Arg(768);
BENCHMARK(blocked_attention_bench<true>)->Name("blocked_attention/openmp")->Arg(96)->Arg(768);
BENCHMARK_MAIN();
