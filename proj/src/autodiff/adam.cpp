#include "factuality/autodiff/adam.hpp"

#include <cmath>

#include "factuality/errors.hpp"

namespace factuality::autodiff {

std::uint64_t AdamState::steps(const Tensor& param) const {
  auto it = slots_.find(&param);
  return it == slots_.end() ? 0 : it->second.t;
}

std::span<const double> AdamState::first_moment(const Tensor& param) const {
  auto it = slots_.find(&param);
  if (it == slots_.end()) return {};
  return it->second.m;
}

std::span<const double> AdamState::second_moment(const Tensor& param) const {
  auto it = slots_.find(&param);
  if (it == slots_.end()) return {};
  return it->second.v;
}

void adam_step(std::span<Tensor* const> params, AdamState& state) {
  for (const Tensor* p : params) {
    if (p == nullptr || !p->trainable() || !p->has_grad()) {
      throw ContractError("adam_step: parameter without gradient");
    }
    if (p->grad().size() != p->size()) {
      throw DimensionError("adam_step: gradient shape does not match parameter");
    }
  }

  const AdamConfig& c = state.config_;
  for (Tensor* p : params) {
    auto& slot = state.slots_[p];
    if (slot.m.size() != p->size()) {
      slot.m.assign(p->size(), 0.0);
      slot.v.assign(p->size(), 0.0);
    }
    ++slot.t;
    const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(slot.t));
    const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(slot.t));
    auto values = p->values();
    auto grad = p->grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad[i];
      slot.m[i] = c.beta1 * slot.m[i] + (1.0 - c.beta1) * g;
      slot.v[i] = c.beta2 * slot.v[i] + (1.0 - c.beta2) * g * g;
      const double m_hat = slot.m[i] / correction1;
      const double v_hat = slot.v[i] / correction2;
      values[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
    p->zero_grad();
  }
  ++state.steps_;
}

}  // namespace factuality::autodiff
