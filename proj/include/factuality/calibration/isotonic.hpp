#pragma once

#include <span>
#include <vector>

#include <json.hpp>

namespace factuality::calibration {

// Monotone step map from raw prediction to calibrated value. Breakpoints are
// strictly increasing, values non-decreasing.
class IsotonicMap {
 public:
  IsotonicMap() = default;
  // Throws std::invalid_argument unless breakpoints strictly increase and
  // values do not decrease.
  IsotonicMap(std::vector<double> breakpoints, std::vector<double> values);

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }
  bool empty() const { return breakpoints_.empty(); }

  // Value at the largest breakpoint <= prediction; the first value below the
  // range.
  double operator()(double prediction) const;

  // [[breakpoint, value], ...]
  nlohmann::json to_json() const;
  static IsotonicMap from_json(const nlohmann::json& j);

 private:
  std::vector<double> breakpoints_;
  std::vector<double> values_;
};

// Least-squares monotone fit of golds as a function of predictions by
// pool-adjacent-violators. Tied predictions are merged first (their golds
// averaged, weighted by count). Throws std::invalid_argument on empty input
// and DimensionError on a length mismatch.
IsotonicMap fit_isotonic(std::span<const double> predictions, std::span<const double> golds);

inline double apply_calibration(const IsotonicMap& map, double prediction) { return map(prediction); }

}  // namespace factuality::calibration
