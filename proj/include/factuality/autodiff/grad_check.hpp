#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "factuality/autodiff/tape.hpp"
#include "factuality/autodiff/tensor.hpp"

namespace factuality::autodiff {

// Builds a scalar loss on a fresh tape from the current values of the
// parameters under test.
using LossBuilder = std::function<Var(Tape&)>;

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t coordinates_checked = 0;
  // Coordinates whose +/- epsilon evaluations straddle a ReLU kink.
  std::size_t coordinates_skipped = 0;
};

// Compares backward() against central differences for every coordinate of
// every tensor in `params`. The relative error of one coordinate is
// |analytic - numeric| / max(1, |analytic|). Tensors are restored on return
// and their gradients cleared.
GradCheckReport grad_check(const LossBuilder& build_loss, std::span<Tensor* const> params,
                           double epsilon = 1e-5);

}  // namespace factuality::autodiff
