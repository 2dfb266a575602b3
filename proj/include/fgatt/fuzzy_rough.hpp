#pragma once
// Fuzzy rough set primitives: a Gaussian similarity relation, fuzzy sets over a
// finite universe, and the inf-max / sup-min approximation operators.

#include "fgatt/common.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace fgatt::fuzzy {

/// Gaussian similarity relation R(x, y) = exp(-|x - y|^2 / (2 sigma^2)).
/// Reflexive, symmetric, valued in [0, 1].
class Kernel {
public:
    explicit Kernel(double sigma = 1.0);

    double sigma() const noexcept { return sigma_; }

    double operator()(std::span<const double> x, std::span<const double> y) const;

    /// Same relation evaluated from a precomputed squared distance.
    double from_squared_distance(double squared_distance) const noexcept {
        return std::exp(-squared_distance * inv_two_sigma_sq_);
    }

private:
    double sigma_;
    double inv_two_sigma_sq_;
};

/// Ordered, nonempty set of equal-dimension samples.
class Universe {
public:
    explicit Universe(std::vector<std::vector<double>> samples);

    std::size_t size() const noexcept { return samples_.size(); }
    std::size_t dimension() const noexcept { return samples_.front().size(); }
    std::span<const double> operator[](std::size_t i) const { return samples_[i]; }

private:
    std::vector<std::vector<double>> samples_;
};

/// Membership degrees indexed by universe position.
class FuzzySet {
public:
    explicit FuzzySet(std::vector<double> membership);

    std::size_t size() const noexcept { return membership_.size(); }
    double operator[](std::size_t i) const { return membership_[i]; }
    std::span<const double> degrees() const noexcept { return membership_; }

    /// Standard complement 1 - d.
    FuzzySet complement() const;

private:
    std::vector<double> membership_;
};

double kernel_similarity(std::span<const double> x, std::span<const double> y, const Kernel& k);

/// inf_{y in U} max(1 - R(x, y), d(y))
double fuzzy_lower_approx(std::span<const double> x, const FuzzySet& d, const Universe& u, const Kernel& k);

/// sup_{y in U} min(R(x, y), d(y))
double fuzzy_upper_approx(std::span<const double> x, const FuzzySet& d, const Universe& u, const Kernel& k);

/// Degree to which y belongs to the similarity class of `target`.
double node_membership(std::span<const double> target, std::span<const double> y, const Kernel& k);

/// The similarity class of `target` over every element of `u`.
FuzzySet similarity_class(std::span<const double> target, const Universe& u, const Kernel& k);

}  // namespace fgatt::fuzzy
