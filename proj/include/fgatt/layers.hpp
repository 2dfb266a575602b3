#pragma once
// Small parameterised building blocks shared by every model.

#include "fgatt/autodiff.hpp"

#include <random>
#include <string>

namespace fgatt::nn {

/// Glorot-uniform initialised rows x cols matrix.
Matrix glorot(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

/// y = x W + b with W: in x out, b: 1 x out.
class Linear {
public:
    Linear() = default;
    Linear(ad::ParameterSet& params, const std::string& name, Eigen::Index in, Eigen::Index out, std::mt19937_64& rng,
           bool bias = true);

    ad::Var operator()(ad::Tape& tape, ad::Var x) const;

    ad::Parameter& weight() const { return *weight_; }
    ad::Parameter* bias() const { return bias_; }

private:
    ad::Parameter* weight_ = nullptr;
    ad::Parameter* bias_ = nullptr;
};

class LayerNorm {
public:
    LayerNorm() = default;
    LayerNorm(ad::ParameterSet& params, const std::string& name, Eigen::Index dim, double eps);

    ad::Var operator()(ad::Tape& tape, ad::Var x) const;

    ad::Parameter& gamma() const { return *gamma_; }
    ad::Parameter& beta() const { return *beta_; }
    double eps() const noexcept { return eps_; }

private:
    ad::Parameter* gamma_ = nullptr;
    ad::Parameter* beta_ = nullptr;
    double eps_ = 1e-5;
};

}  // namespace fgatt::nn
