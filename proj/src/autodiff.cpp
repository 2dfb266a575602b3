#include "fgatt/autodiff.hpp"

#include <cmath>

namespace fgatt::ad {

Parameter& ParameterSet::add(std::string name, Matrix init) {
    Parameter& p = params_.emplace_back();
    p.name = std::move(name);
    p.value = std::move(init);
    p.zero_grad();
    return p;
}

std::size_t ParameterSet::scalar_count() const noexcept {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
    return n;
}

Parameter* ParameterSet::find(const std::string& name) {
    for (auto& p : params_) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

void ParameterSet::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

bool ParameterSet::all_finite() const {
    for (const auto& p : params_) {
        if (!p.value.allFinite()) return false;
    }
    return true;
}

std::vector<Matrix> ParameterSet::snapshot() const {
    std::vector<Matrix> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.value);
    return out;
}

void ParameterSet::restore(const std::vector<Matrix>& values) {
    if (values.size() != params_.size()) throw InputError("parameter snapshot has the wrong length");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i].rows() != params_[i].value.rows() || values[i].cols() != params_[i].value.cols()) {
            throw InputError("parameter snapshot shape mismatch for " + params_[i].name);
        }
        params_[i].value = values[i];
    }
}

const Matrix& Var::value() const {
    return tape_->value(id_);
}

Var Tape::constant(Matrix value) {
    nodes_.push_back(Node{std::move(value), Matrix(), nullptr, false});
    return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Parameter& p) {
    Parameter* target = &p;
    nodes_.push_back(Node{p.value, Matrix(), [target](Tape& t, std::size_t self) { target->grad += t.grad(self); }, true});
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::span<const Var> inputs, Backward backward) {
    bool needs = false;
    for (const auto& in : inputs) {
        needs = needs || nodes_[in.id()].needs_grad;
    }
    nodes_.push_back(Node{std::move(value), Matrix(), needs ? std::move(backward) : nullptr, needs});
    return Var(this, nodes_.size() - 1);
}

Matrix& Tape::grad(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0 && n.value.size() != 0) {
        n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    }
    return n.grad;
}

void Tape::backward(Var root) {
    if (root.tape() != this) throw InputError("backward root belongs to another tape");
    if (value(root.id()).size() != 1) throw InputError("backward root must be a 1 x 1 value");
    grad(root.id())(0, 0) = 1.0;
    for (std::size_t id = root.id() + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (!n.needs_grad || !n.backward || n.grad.size() == 0) continue;
        n.backward(*this, id);
    }
}

namespace {

void check_same_shape(Var a, Var b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw InputError(std::string(op) + ": operand shapes differ");
    }
}

}  // namespace

Var matmul(Var a, Var b) {
    if (a.cols() != b.rows()) throw InputError("matmul: inner dimensions differ");
    Matrix out = a.value() * b.value();
    const Var in[] = {a, b};
    return a.tape()->record(std::move(out), in, [a, b](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        if (t.needs_grad(a.id())) t.grad(a.id()).noalias() += g * t.value(b.id()).transpose();
        if (t.needs_grad(b.id())) t.grad(b.id()).noalias() += t.value(a.id()).transpose() * g;
    });
}

Var add(Var a, Var b) {
    check_same_shape(a, b, "add");
    const Var in[] = {a, b};
    return a.tape()->record(a.value() + b.value(), in, [a, b](Tape& t, std::size_t self) {
        if (t.needs_grad(a.id())) t.grad(a.id()) += t.grad(self);
        if (t.needs_grad(b.id())) t.grad(b.id()) += t.grad(self);
    });
}

Var sub(Var a, Var b) {
    check_same_shape(a, b, "sub");
    const Var in[] = {a, b};
    return a.tape()->record(a.value() - b.value(), in, [a, b](Tape& t, std::size_t self) {
        if (t.needs_grad(a.id())) t.grad(a.id()) += t.grad(self);
        if (t.needs_grad(b.id())) t.grad(b.id()) -= t.grad(self);
    });
}

Var hadamard(Var a, Var b) {
    check_same_shape(a, b, "hadamard");
    const Var in[] = {a, b};
    return a.tape()->record(a.value().cwiseProduct(b.value()), in, [a, b](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        if (t.needs_grad(a.id())) t.grad(a.id()) += g.cwiseProduct(t.value(b.id()));
        if (t.needs_grad(b.id())) t.grad(b.id()) += g.cwiseProduct(t.value(a.id()));
    });
}

Var scale(Var a, double s) {
    const Var in[] = {a};
    return a.tape()->record(a.value() * s, in, [a, s](Tape& t, std::size_t self) { t.grad(a.id()) += s * t.grad(self); });
}

Var add_row(Var a, Var row) {
    if (row.rows() != 1 || row.cols() != a.cols()) throw InputError("add_row: bias must be 1 x cols");
    Matrix out = a.value().rowwise() + row.value().row(0);
    const Var in[] = {a, row};
    return a.tape()->record(std::move(out), in, [a, row](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        if (t.needs_grad(a.id())) t.grad(a.id()) += g;
        if (t.needs_grad(row.id())) t.grad(row.id()) += g.colwise().sum();
    });
}

Var add_constant(Var a, const Matrix& c) {
    if (c.rows() != a.rows() || c.cols() != a.cols()) throw InputError("add_constant: shape mismatch");
    const Var in[] = {a};
    return a.tape()->record(a.value() + c, in, [a](Tape& t, std::size_t self) { t.grad(a.id()) += t.grad(self); });
}

Var one_minus(Var a) {
    const Var in[] = {a};
    return a.tape()->record((1.0 - a.value().array()).matrix(), in,
                            [a](Tape& t, std::size_t self) { t.grad(a.id()) -= t.grad(self); });
}

Var leaky_relu(Var a, double slope) {
    Matrix out = a.value().unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
    const Var in[] = {a};
    return a.tape()->record(std::move(out), in, [a, slope](Tape& t, std::size_t self) {
        const Matrix& x = t.value(a.id());
        t.grad(a.id()) += t.grad(self).binaryExpr(x, [slope](double g, double v) { return v > 0.0 ? g : slope * g; });
    });
}

Var relu(Var a) {
    return leaky_relu(a, 0.0);
}

Var sigmoid(Var a) {
    Matrix out = a.value().unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    const Var in[] = {a};
    return a.tape()->record(std::move(out), in, [a](Tape& t, std::size_t self) {
        const Matrix& y = t.value(self);
        t.grad(a.id()) += t.grad(self).cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix()));
    });
}

Var tanh(Var a) {
    Matrix out = a.value().array().tanh().matrix();
    const Var in[] = {a};
    return a.tape()->record(std::move(out), in, [a](Tape& t, std::size_t self) {
        const Matrix& y = t.value(self);
        t.grad(a.id()) += t.grad(self).cwiseProduct((1.0 - y.array().square()).matrix());
    });
}

Var layer_norm_rows(Var x, Var gamma, Var beta, double eps) {
    const Eigen::Index d = x.cols();
    if (gamma.rows() != 1 || gamma.cols() != d || beta.rows() != 1 || beta.cols() != d) {
        throw InputError("layer_norm_rows: gain and bias must be 1 x d");
    }
    const Matrix& xv = x.value();
    Matrix xhat(xv.rows(), d);
    Vector inv_std(xv.rows());
    for (Eigen::Index r = 0; r < xv.rows(); ++r) {
        const double mu = xv.row(r).mean();
        const double var = (xv.row(r).array() - mu).square().mean();
        inv_std(r) = 1.0 / std::sqrt(var + eps);
        xhat.row(r) = (xv.row(r).array() - mu) * inv_std(r);
    }
    Matrix out = (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() + beta.value().row(0).array();
    const Var in[] = {x, gamma, beta};
    return x.tape()->record(std::move(out), in,
                            [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t, std::size_t self) {
                                const Matrix& g = t.grad(self);
                                if (t.needs_grad(gamma.id())) t.grad(gamma.id()) += g.cwiseProduct(xhat).colwise().sum();
                                if (t.needs_grad(beta.id())) t.grad(beta.id()) += g.colwise().sum();
                                if (!t.needs_grad(x.id())) return;
                                const auto gain = t.value(gamma.id()).row(0).array();
                                Matrix& gx = t.grad(x.id());
                                const double dn = static_cast<double>(xhat.cols());
                                for (Eigen::Index r = 0; r < g.rows(); ++r) {
                                    const Eigen::ArrayXd gh = (g.row(r).array() * gain).transpose();
                                    const double mean_gh = gh.mean();
                                    const double mean_ghx = (gh * xhat.row(r).array().transpose()).sum() / dn;
                                    gx.row(r).array() +=
                                        (inv_std(r) * (gh - mean_gh - xhat.row(r).array().transpose() * mean_ghx)).transpose();
                                }
                            });
}

Var dropout(Var x, double rate, bool active, std::mt19937_64& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
    if (!active || rate == 0.0) return x;
    const double keep_scale = 1.0 / (1.0 - rate);
    Matrix mask(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < mask.size(); ++i) {
        mask.data()[i] = uniform01(rng) < rate ? 0.0 : keep_scale;
    }
    Matrix out = x.value().cwiseProduct(mask);
    const Var in[] = {x};
    return x.tape()->record(std::move(out), in, [x, mask = std::move(mask)](Tape& t, std::size_t self) {
        t.grad(x.id()) += t.grad(self).cwiseProduct(mask);
    });
}

Var gather_rows(Var x, std::vector<std::size_t> source) {
    const Matrix& xv = x.value();
    Matrix out(static_cast<Eigen::Index>(source.size()), xv.cols());
    for (std::size_t i = 0; i < source.size(); ++i) {
        if (source[i] >= static_cast<std::size_t>(xv.rows())) throw InputError("gather_rows: index out of range");
        out.row(static_cast<Eigen::Index>(i)) = xv.row(static_cast<Eigen::Index>(source[i]));
    }
    const Var in[] = {x};
    return x.tape()->record(std::move(out), in, [x, source = std::move(source)](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        Matrix& gx = t.grad(x.id());
        for (std::size_t i = 0; i < source.size(); ++i) {
            gx.row(static_cast<Eigen::Index>(source[i])) += g.row(static_cast<Eigen::Index>(i));
        }
    });
}

Var concat_rows(std::span<const Var> parts) {
    if (parts.empty()) throw InputError("concat_rows: no parts");
    Eigen::Index rows = 0;
    const Eigen::Index cols = parts.front().cols();
    for (const auto& p : parts) {
        if (p.cols() != cols) throw InputError("concat_rows: column counts differ");
        rows += p.rows();
    }
    Matrix out(rows, cols);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        out.middleRows(at, p.rows()) = p.value();
        at += p.rows();
    }
    std::vector<Var> inputs(parts.begin(), parts.end());
    return parts.front().tape()->record(std::move(out), parts, [inputs](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        Eigen::Index at = 0;
        for (const auto& p : inputs) {
            const Eigen::Index r = t.value(p.id()).rows();
            if (t.needs_grad(p.id())) t.grad(p.id()) += g.middleRows(at, r);
            at += r;
        }
    });
}

Var concat_cols(Var a, Var b) {
    if (a.rows() != b.rows()) throw InputError("concat_cols: row counts differ");
    Matrix out(a.rows(), a.cols() + b.cols());
    out.leftCols(a.cols()) = a.value();
    out.rightCols(b.cols()) = b.value();
    const Var in[] = {a, b};
    return a.tape()->record(std::move(out), in, [a, b](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        const Eigen::Index ca = t.value(a.id()).cols();
        if (t.needs_grad(a.id())) t.grad(a.id()) += g.leftCols(ca);
        if (t.needs_grad(b.id())) t.grad(b.id()) += g.rightCols(g.cols() - ca);
    });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
    if (start < 0 || count < 0 || start + count > a.cols()) throw InputError("slice_cols: range out of bounds");
    Matrix out = a.value().middleCols(start, count);
    const Var in[] = {a};
    return a.tape()->record(std::move(out), in, [a, start, count](Tape& t, std::size_t self) {
        t.grad(a.id()).middleCols(start, count) += t.grad(self);
    });
}

Var reshape(Var a, Eigen::Index rows, Eigen::Index cols) {
    if (rows * cols != a.value().size()) throw InputError("reshape: element count changes");
    Matrix out = Eigen::Map<const Matrix>(a.value().data(), rows, cols);
    const Var in[] = {a};
    return a.tape()->record(std::move(out), in, [a](Tape& t, std::size_t self) {
        Matrix& ga = t.grad(a.id());
        const Matrix& g = t.grad(self);
        Eigen::Map<Matrix>(ga.data(), g.rows(), g.cols()) += g;
    });
}

Var masked_mse(Var pred, const Matrix& target, const Matrix& weight) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols() || weight.rows() != target.rows() ||
        weight.cols() != target.cols()) {
        throw InputError("masked_mse: shape mismatch");
    }
    const double count = (weight.array() != 0.0).count();
    if (count == 0) throw InputError("masked_mse: no entries selected");
    Matrix sel = (weight.array() != 0.0).cast<double>().matrix();
    Matrix diff = (pred.value() - target).cwiseProduct(sel);
    Matrix out(1, 1);
    out(0, 0) = diff.squaredNorm() / count;
    const Var in[] = {pred};
    return pred.tape()->record(std::move(out), in, [pred, diff = std::move(diff), count](Tape& t, std::size_t self) {
        t.grad(pred.id()) += (2.0 * t.grad(self)(0, 0) / count) * diff;
    });
}

Var weighted_sum(Var a, const Matrix& w) {
    if (w.rows() != a.rows() || w.cols() != a.cols()) throw InputError("weighted_sum: shape mismatch");
    Matrix out(1, 1);
    out(0, 0) = a.value().cwiseProduct(w).sum();
    const Var in[] = {a};
    return a.tape()->record(std::move(out), in,
                            [a, w](Tape& t, std::size_t self) { t.grad(a.id()) += t.grad(self)(0, 0) * w; });
}

}  // namespace fgatt::ad
