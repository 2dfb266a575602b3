#include "fgatt/window.hpp"

namespace fgatt {

std::size_t MaskedWindow::missing_count() const noexcept {
    std::size_t n = 0;
    for (Eigen::Index i = 0; i < mask.size(); ++i) {
        n += mask.data()[i] == 0 ? 1 : 0;
    }
    return n;
}

void MaskedWindow::validate() const {
    if (values.rows() != targets.rows() || values.cols() != targets.cols() || mask.rows() != values.rows() ||
        mask.cols() != values.cols()) {
        throw InputError("masked window arrays have inconsistent shapes");
    }
    if (values.rows() == 0 || values.cols() == 0) {
        throw InputError("masked window is empty");
    }
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        const double expected = mask.data()[i] != 0 ? targets.data()[i] : 0.0;
        if (values.data()[i] != expected) {
            throw InputError("masked window values must equal targets where observed and 0 where missing");
        }
    }
}

MaskedWindow make_masked_window(const Matrix& targets, const Mask& mask, std::size_t window_id) {
    if (targets.rows() != mask.rows() || targets.cols() != mask.cols()) {
        throw InputError("mask shape does not match targets");
    }
    MaskedWindow w;
    w.targets = targets;
    w.mask = mask;
    w.values = Matrix::Zero(targets.rows(), targets.cols());
    for (Eigen::Index i = 0; i < targets.size(); ++i) {
        if (mask.data()[i] != 0) {
            w.values.data()[i] = targets.data()[i];
        }
    }
    w.window_id = window_id;
    return w;
}

}  // namespace fgatt
