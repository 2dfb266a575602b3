#include "fgatt/layers.hpp"

#include <cmath>

namespace fgatt::nn {

Matrix glorot(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = (2.0 * uniform01(rng) - 1.0) * limit;
    }
    return m;
}

Linear::Linear(ad::ParameterSet& params, const std::string& name, Eigen::Index in, Eigen::Index out, std::mt19937_64& rng,
               bool bias)
    : weight_(&params.add(name + ".weight", glorot(in, out, rng))),
      bias_(bias ? &params.add(name + ".bias", Matrix::Zero(1, out)) : nullptr) {}

ad::Var Linear::operator()(ad::Tape& tape, ad::Var x) const {
    ad::Var y = ad::matmul(x, tape.parameter(*weight_));
    return bias_ != nullptr ? ad::add_row(y, tape.parameter(*bias_)) : y;
}

LayerNorm::LayerNorm(ad::ParameterSet& params, const std::string& name, Eigen::Index dim, double eps)
    : gamma_(&params.add(name + ".gamma", Matrix::Ones(1, dim))),
      beta_(&params.add(name + ".beta", Matrix::Zero(1, dim))),
      eps_(eps) {}

ad::Var LayerNorm::operator()(ad::Tape& tape, ad::Var x) const {
    return ad::layer_norm_rows(x, tape.parameter(*gamma_), tape.parameter(*beta_), eps_);
}

}  // namespace fgatt::nn
