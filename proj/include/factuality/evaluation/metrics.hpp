#pragma once

#include <optional>
#include <span>

namespace factuality::evaluation {

// Both throw DimensionError on a length mismatch and std::invalid_argument on
// empty input.
double mae(std::span<const double> predictions, std::span<const double> golds);
// Sample Pearson correlation; nullopt when either side has zero variance.
std::optional<double> pearson(std::span<const double> predictions, std::span<const double> golds);

}  // namespace factuality::evaluation
