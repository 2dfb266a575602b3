#pragma once
// Minimal reverse-mode differentiation over dense matrices.
//
// A Tape records every operation of one forward pass. Values live on the tape;
// gradients are allocated lazily during backward(). Parameters are owned by a
// ParameterSet and outlive any tape; their gradients accumulate in place until
// zero_grad() is called.
//
// Example:
//   ad::Tape tape;
//   auto x = tape.constant(input);
//   auto h = ad::relu(ad::add_row(ad::matmul(x, tape.parameter(w)), tape.parameter(b)));
//   auto loss = ad::weighted_sum(h, weights);
//   tape.backward(loss);

#include "fgatt/common.hpp"

#include <deque>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace fgatt::ad {

struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;

    void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

/// Owns parameters with stable addresses, in registration order.
class ParameterSet {
public:
    Parameter& add(std::string name, Matrix init);

    std::size_t size() const noexcept { return params_.size(); }
    std::size_t scalar_count() const noexcept;
    Parameter& operator[](std::size_t i) { return params_[i]; }
    const Parameter& operator[](std::size_t i) const { return params_[i]; }
    Parameter* find(const std::string& name);

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    void zero_grad();
    bool all_finite() const;

    std::vector<Matrix> snapshot() const;
    void restore(const std::vector<Matrix>& values);

private:
    std::deque<Parameter> params_;
};

class Tape;

/// Handle to a value recorded on a tape.
class Var {
public:
    Var() = default;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    const Matrix& value() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
    std::size_t id() const noexcept { return id_; }
    Tape* tape() const noexcept { return tape_; }

private:
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

class Tape {
public:
    using Backward = std::function<void(Tape&, std::size_t self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Matrix value);
    Var parameter(Parameter& p);

    /// Record a derived value. `backward` runs only if some input needs a gradient.
    Var record(Matrix value, std::span<const Var> inputs, Backward backward);

    /// Seed d(root)/d(root) = 1 for a 1 x 1 root and propagate to every parameter.
    void backward(Var root);

    const Matrix& value(std::size_t id) const { return nodes_[id].value; }
    bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
    /// Gradient slot of a node, zero-initialised on first access.
    Matrix& grad(std::size_t id);
    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        Backward backward;
        bool needs_grad = false;
    };
    std::vector<Node> nodes_;
};

// Linear algebra
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double s);
/// a + row broadcast over every row of a.
Var add_row(Var a, Var row);
/// a + fixed matrix of the same shape.
Var add_constant(Var a, const Matrix& c);
/// 1 - a
Var one_minus(Var a);

// Pointwise nonlinearities
Var leaky_relu(Var a, double slope);
Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);

/// Row-wise layer normalization with learned gain (1 x d) and bias (1 x d).
Var layer_norm_rows(Var x, Var gamma, Var beta, double eps);

/// Inverted dropout; identity when `active` is false or rate == 0.
Var dropout(Var x, double rate, bool active, std::mt19937_64& rng);

// Shape manipulation
/// out.row(i) = x.row(source[i]).
Var gather_rows(Var x, std::vector<std::size_t> source);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(Var a, Var b);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
/// Row-major reshape.
Var reshape(Var a, Eigen::Index rows, Eigen::Index cols);

// Reductions to 1 x 1
/// Mean of (pred - target)^2 over entries where weight != 0; pred, target, weight same shape.
Var masked_mse(Var pred, const Matrix& target, const Matrix& weight);
/// sum(a .* w) for a fixed weight matrix.
Var weighted_sum(Var a, const Matrix& w);

}  // namespace fgatt::ad
