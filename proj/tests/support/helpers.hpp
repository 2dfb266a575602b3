#pragma once
// Random instances and a central finite-difference gradient checker shared by
// the unit tests and the acceptance runner.

#include "fgatt/autodiff.hpp"
#include "fgatt/common.hpp"
#include "fgatt/graph_builder.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace testing_support {

inline double uniform(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t uniform_int(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// k / 2^20 for random k: 1 - d is then exact in binary floating point, so
/// complement-based identities can be compared with ==.
inline double dyadic_degree(std::mt19937_64& rng) {
    return static_cast<double>(uniform_int(rng, 0, 1u << 20)) / static_cast<double>(1u << 20);
}

inline fgatt::Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double lo = -1.0,
                                   double hi = 1.0) {
    fgatt::Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, lo, hi);
    return m;
}

inline std::vector<std::vector<double>> to_rows(const fgatt::Matrix& m) {
    std::vector<std::vector<double>> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) out[static_cast<std::size_t>(r)].assign(m.row(r).data(), m.row(r).data() + m.cols());
    return out;
}

/// Random directed graph where every node keeps between 1 and n - 1 distinct neighbors.
inline fgatt::graph::DynamicGraph random_graph(std::mt19937_64& rng, std::size_t n) {
    std::vector<fgatt::graph::Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> others;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) others.push_back(j);
        }
        std::shuffle(others.begin(), others.end(), rng);
        const std::size_t keep = uniform_int(rng, 1, n - 1);
        for (std::size_t k = 0; k < keep; ++k) edges.push_back({i, others[k], uniform(rng)});
    }
    return fgatt::graph::DynamicGraph(n, std::move(edges));
}

/// Zero-initialised biases put many pre-activations exactly on a ReLU kink, where
/// central differences average the two one-sided slopes. Gradient checks move off it first.
inline void randomize_offsets(fgatt::ad::ParameterSet& params, std::mt19937_64& rng) {
    for (auto& p : params) {
        if (p.name.ends_with("bias") || p.name.ends_with("beta")) {
            p.value = random_matrix(rng, p.value.rows(), p.value.cols(), -0.3, 0.3);
        }
    }
}

struct GradCheck {
    double max_relative_error = 0.0;
    std::string worst_parameter;
};

/// Compares tape gradients of `loss` against central differences with step `h` for
/// every scalar of every parameter. The per-parameter error is
/// ||analytic - numeric|| / max(||analytic||, ||numeric||, floor). Raise the floor for
/// parameters whose true gradient is zero, where both sides are pure rounding noise.
inline GradCheck check_gradients(fgatt::ad::ParameterSet& params,
                                 const std::function<fgatt::ad::Var(fgatt::ad::Tape&)>& loss, double h = 1e-5,
                                 double floor = 1e-8) {
    params.zero_grad();
    {
        fgatt::ad::Tape tape;
        tape.backward(loss(tape));
    }
    auto scalar_loss = [&] {
        fgatt::ad::Tape tape;
        return loss(tape).value()(0, 0);
    };
    GradCheck result;
    for (auto& p : params) {
        fgatt::Matrix numeric(p.value.rows(), p.value.cols());
        for (Eigen::Index i = 0; i < p.value.size(); ++i) {
            const double saved = p.value.data()[i];
            p.value.data()[i] = saved + h;
            const double up = scalar_loss();
            p.value.data()[i] = saved - h;
            const double down = scalar_loss();
            p.value.data()[i] = saved;
            numeric.data()[i] = (up - down) / (2.0 * h);
        }
        const fgatt::Matrix analytic = p.grad.size() == 0 ? fgatt::Matrix::Zero(p.value.rows(), p.value.cols()) : p.grad;
        const double denom = std::max({analytic.norm(), numeric.norm(), floor});
        const double err = (analytic - numeric).norm() / denom;
        if (err > result.max_relative_error) {
            result.max_relative_error = err;
            result.worst_parameter = p.name;
        }
    }
    params.zero_grad();
    return result;
}

}  // namespace testing_support
