#include "factuality/autodiff/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "factuality/errors.hpp"

namespace factuality::autodiff {
namespace {

struct Evaluation {
  double loss;
  std::uint64_t relu_pattern;
};

Evaluation evaluate(const LossBuilder& build_loss) {
  Tape tape;
  Var loss = build_loss(tape);
  return {tape.scalar(loss), tape.relu_pattern()};
}

}  // namespace

GradCheckReport grad_check(const LossBuilder& build_loss, std::span<Tensor* const> params,
                           double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1e-3)) {
    throw std::invalid_argument("grad_check: epsilon must lie in (0, 1e-3], got " +
                                std::to_string(epsilon));
  }
  for (Tensor* p : params) {
    if (p == nullptr || !p->trainable()) {
      throw ContractError("grad_check: every checked tensor must be trainable");
    }
    p->zero_grad();
  }

  std::uint64_t base_pattern = 0;
  {
    Tape tape;
    Var loss = build_loss(tape);
    base_pattern = tape.relu_pattern();
    tape.backward(loss);
  }

  GradCheckReport report;
  for (Tensor* p : params) {
    std::vector<double> analytic(p->grad().begin(), p->grad().end());
    auto values = p->values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + epsilon;
      const Evaluation plus = evaluate(build_loss);
      values[i] = saved - epsilon;
      const Evaluation minus = evaluate(build_loss);
      values[i] = saved;

      if (plus.relu_pattern != base_pattern || minus.relu_pattern != base_pattern) {
        ++report.coordinates_skipped;
        continue;
      }
      const double numeric = (plus.loss - minus.loss) / (2.0 * epsilon);
      const double error = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
      report.max_relative_error = std::max(report.max_relative_error, error);
      ++report.coordinates_checked;
    }
    p->clear_grad();
  }
  return report;
}

}  // namespace factuality::autodiff
