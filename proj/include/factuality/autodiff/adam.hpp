#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "factuality/autodiff/tensor.hpp"

namespace factuality::autodiff {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Optimizer state keyed by parameter tensor. Each parameter keeps its own
// step count so that parameters updated on only some steps (per-dataset
// regression heads) still get correct bias correction.
class AdamState {
 public:
  explicit AdamState(AdamConfig config = {}) : config_(config) {}

  const AdamConfig& config() const { return config_; }
  // Number of adam_step calls made with this state.
  std::uint64_t steps() const { return steps_; }
  std::uint64_t steps(const Tensor& param) const;
  std::span<const double> first_moment(const Tensor& param) const;
  std::span<const double> second_moment(const Tensor& param) const;

 private:
  friend void adam_step(std::span<Tensor* const> params, AdamState& state);

  struct Slot {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t t = 0;
  };

  AdamConfig config_;
  std::unordered_map<const Tensor*, Slot> slots_;
  std::uint64_t steps_ = 0;
};

// Bias-corrected Adam update of every tensor in `params` from its current
// gradient; gradients are zeroed afterwards. Every listed parameter must be
// trainable and hold a gradient.
void adam_step(std::span<Tensor* const> params, AdamState& state);

}  // namespace factuality::autodiff
