#include "factuality/calibration/isotonic.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include "factuality/errors.hpp"

namespace factuality::calibration {

IsotonicMap::IsotonicMap(std::vector<double> breakpoints, std::vector<double> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  if (breakpoints_.size() != values_.size()) {
    throw std::invalid_argument("isotonic map: breakpoint and value counts differ");
  }
  for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
    if (!(breakpoints_[i] > breakpoints_[i - 1])) {
      throw std::invalid_argument("isotonic map: breakpoints must strictly increase");
    }
    if (values_[i] < values_[i - 1]) throw std::invalid_argument("isotonic map: values must not decrease");
  }
}

double IsotonicMap::operator()(double prediction) const {
  if (breakpoints_.empty()) throw ContractError("isotonic map is empty");
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), prediction);
  if (it == breakpoints_.begin()) return values_.front();
  return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

nlohmann::json IsotonicMap::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) out.push_back({breakpoints_[i], values_[i]});
  return out;
}

IsotonicMap IsotonicMap::from_json(const nlohmann::json& j) {
  std::vector<double> x, y;
  try {
    for (const auto& pair : j) {
      if (!pair.is_array() || pair.size() != 2) throw std::invalid_argument("expected [breakpoint, value]");
      x.push_back(pair[0].get<double>());
      y.push_back(pair[1].get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("isotonic map: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("isotonic map: ") + e.what());
  }
  try {
    return IsotonicMap(std::move(x), std::move(y));
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
}

IsotonicMap fit_isotonic(std::span<const double> predictions, std::span<const double> golds) {
  if (predictions.size() != golds.size()) {
    throw DimensionError("fit_isotonic: " + std::to_string(predictions.size()) + " predictions vs " +
                         std::to_string(golds.size()) + " golds");
  }
  if (predictions.empty()) throw std::invalid_argument("fit_isotonic: empty input");

  std::vector<std::size_t> order(predictions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return predictions[a] < predictions[b]; });

  struct Block {
    double sum;
    double weight;
    std::size_t first;  // index into `keys`
    double mean() const { return sum / weight; }
  };
  std::vector<double> keys;
  std::vector<Block> blocks;
  for (std::size_t i : order) {
    if (!keys.empty() && predictions[i] == keys.back()) {
      blocks.back().sum += golds[i];
      blocks.back().weight += 1.0;
      continue;
    }
    keys.push_back(predictions[i]);
    blocks.push_back({golds[i], 1.0, keys.size() - 1});
  }
  // Second pass: PAVA over the tie-merged blocks.
  std::vector<Block> stack;
  for (const Block& b : blocks) {
    stack.push_back(b);
    while (stack.size() > 1 && stack[stack.size() - 2].mean() > stack.back().mean()) {
      Block top = stack.back();
      stack.pop_back();
      stack.back().sum += top.sum;
      stack.back().weight += top.weight;
    }
  }
  std::vector<double> values(keys.size());
  for (std::size_t s = 0; s < stack.size(); ++s) {
    const std::size_t end = s + 1 < stack.size() ? stack[s + 1].first : keys.size();
    const double v = stack[s].mean();
    for (std::size_t k = stack[s].first; k < end; ++k) values[k] = v;
  }
  // Float rounding in block means can leave a 1-ulp inversion; restore
  // monotonicity explicitly.
  for (std::size_t k = 1; k < values.size(); ++k) values[k] = std::max(values[k], values[k - 1]);
  return IsotonicMap(std::move(keys), std::move(values));
}

}  // namespace factuality::calibration
