#pragma once

#include "fgatt/common.hpp"

#include <cstddef>
#include <string>

namespace fgatt {

/// Observation mask: 1 = observed, 0 = missing.
using Mask = Eigen::Matrix<unsigned char, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A T x N slice of normalized readings with simulated missingness.
///
/// `values` equals `targets` on observed entries and is exactly 0 on missing ones.
struct MaskedWindow {
    Matrix values;   // T x N, zero-filled where missing
    Mask mask;       // T x N, 1 = observed
    Matrix targets;  // T x N ground truth
    std::size_t window_id = 0;

    std::size_t length() const noexcept { return static_cast<std::size_t>(values.rows()); }
    std::size_t node_count() const noexcept { return static_cast<std::size_t>(values.cols()); }
    std::size_t missing_count() const noexcept;

    /// Throws InputError when shapes disagree or the zero-fill invariant is broken.
    void validate() const;
};

/// Build a window from ground truth and a mask, zero-filling missing entries.
MaskedWindow make_masked_window(const Matrix& targets, const Mask& mask, std::size_t window_id = 0);

}  // namespace fgatt
