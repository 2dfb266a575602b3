#include "fgatt/fuzzy_rough.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fgatt::fuzzy {

Kernel::Kernel(double sigma) : sigma_(sigma), inv_two_sigma_sq_(0.0) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw ConfigError("kernel bandwidth sigma must be positive and finite");
    }
    inv_two_sigma_sq_ = 1.0 / (2.0 * sigma * sigma);
}

double Kernel::operator()(std::span<const double> x, std::span<const double> y) const {
    if (x.size() != y.size()) {
        throw InputError("kernel arguments have different dimensions");
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double diff = x[i] - y[i];
        sq += diff * diff;
    }
    return from_squared_distance(sq);
}

Universe::Universe(std::vector<std::vector<double>> samples) : samples_(std::move(samples)) {
    if (samples_.empty()) {
        throw InputError("universe must be nonempty");
    }
    const std::size_t d = samples_.front().size();
    if (d == 0) {
        throw InputError("universe samples must have dimension >= 1");
    }
    for (const auto& s : samples_) {
        if (s.size() != d) {
            throw InputError("universe samples must share one dimension");
        }
    }
}

FuzzySet::FuzzySet(std::vector<double> membership) : membership_(std::move(membership)) {
    for (double m : membership_) {
        if (!(m >= 0.0 && m <= 1.0)) {
            throw InputError("fuzzy membership degrees must lie in [0, 1]");
        }
    }
}

FuzzySet FuzzySet::complement() const {
    std::vector<double> out(membership_.size());
    std::transform(membership_.begin(), membership_.end(), out.begin(), [](double m) { return 1.0 - m; });
    return FuzzySet(std::move(out));
}

double kernel_similarity(std::span<const double> x, std::span<const double> y, const Kernel& k) {
    return k(x, y);
}

namespace {

void check_operands(std::span<const double> x, const FuzzySet& d, const Universe& u) {
    if (x.size() != u.dimension()) {
        throw InputError("sample dimension does not match the universe");
    }
    if (d.size() != u.size()) {
        throw InputError("fuzzy set must be defined on every universe element");
    }
}

}  // namespace

double fuzzy_lower_approx(std::span<const double> x, const FuzzySet& d, const Universe& u, const Kernel& k) {
    check_operands(x, d, u);
    double inf = std::numeric_limits<double>::infinity();
    for (std::size_t y = 0; y < u.size(); ++y) {
        inf = std::min(inf, std::max(1.0 - k(x, u[y]), d[y]));
    }
    return inf;
}

double fuzzy_upper_approx(std::span<const double> x, const FuzzySet& d, const Universe& u, const Kernel& k) {
    check_operands(x, d, u);
    double sup = -std::numeric_limits<double>::infinity();
    for (std::size_t y = 0; y < u.size(); ++y) {
        sup = std::max(sup, std::min(k(x, u[y]), d[y]));
    }
    return sup;
}

double node_membership(std::span<const double> target, std::span<const double> y, const Kernel& k) {
    return k(y, target);
}

FuzzySet similarity_class(std::span<const double> target, const Universe& u, const Kernel& k) {
    std::vector<double> m(u.size());
    for (std::size_t y = 0; y < u.size(); ++y) {
        m[y] = node_membership(target, u[y], k);
    }
    return FuzzySet(std::move(m));
}

}  // namespace fgatt::fuzzy
