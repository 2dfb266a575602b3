#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fgatt {

/// Dense row-major matrix used for every activation, parameter and gradient.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using Vector = Eigen::VectorXd;

// Error taxonomy. Every failure surfaced by the library is one of these.

/// Malformed or inconsistent input data (shapes, empty sets, bad files).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Invalid hyperparameter or configuration value.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A graph or model structure that violates a precondition (e.g. a node with no neighbors).
class StructuralError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Training produced a non-finite loss or parameter.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// SplitMix64 step; used to derive independent, reproducible sub-seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept {
    return mix_seed(mix_seed(a) ^ (b + 0x632be59bd9b4e019ULL));
}

/// Uniform double in [0, 1) from a 64-bit engine output, identical on every standard library.
template <typename Engine>
double uniform01(Engine& engine) {
    return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace fgatt
