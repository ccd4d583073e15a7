#include "factuality/evaluation/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "factuality/errors.hpp"

namespace factuality::evaluation {
namespace {

void check(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(what) + ": " + std::to_string(a.size()) + " predictions vs " +
                         std::to_string(b.size()) + " golds");
  }
  if (a.empty()) throw std::invalid_argument(std::string(what) + ": empty input");
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double mae(std::span<const double> predictions, std::span<const double> golds) {
  check(predictions, golds, "mae");
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) total += std::abs(predictions[i] - golds[i]);
  return total / static_cast<double>(predictions.size());
}

std::optional<double> pearson(std::span<const double> predictions, std::span<const double> golds) {
  check(predictions, golds, "pearson");
  auto constant = [](std::span<const double> v) {
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *lo == *hi;
  };
  if (constant(predictions) || constant(golds)) return std::nullopt;
  const double mp = mean(predictions);
  const double mg = mean(golds);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double dp = predictions[i] - mp;
    const double dg = golds[i] - mg;
    sxy += dp * dg;
    sxx += dp * dp;
    syy += dg * dg;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace factuality::evaluation
