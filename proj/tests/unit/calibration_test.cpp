#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "factuality/calibration/isotonic.hpp"
#include "factuality/errors.hpp"

namespace factuality::calibration {
namespace {

// Weighted isotonic regression by the min-max formula:
// y_i = max_{j <= i} min_{k >= i} mean(g_j..g_k) over tie-merged blocks.
std::map<double, double> minmax_fit(const std::vector<double>& preds, const std::vector<double>& golds) {
  std::map<double, std::pair<double, double>> merged;  // x -> (sum, count)
  for (std::size_t i = 0; i < preds.size(); ++i) {
    merged[preds[i]].first += golds[i];
    merged[preds[i]].second += 1.0;
  }
  std::vector<double> xs, sums, counts;
  for (const auto& [x, acc] : merged) {
    xs.push_back(x);
    sums.push_back(acc.first);
    counts.push_back(acc.second);
  }
  const std::size_t m = xs.size();
  std::map<double, double> fit;
  for (std::size_t i = 0; i < m; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j <= i; ++j) {
      double lowest = std::numeric_limits<double>::infinity();
      for (std::size_t k = i; k < m; ++k) {
        double s = 0, c = 0;
        for (std::size_t t = j; t <= k; ++t) {
          s += sums[t];
          c += counts[t];
        }
        lowest = std::min(lowest, s / c);
      }
      best = std::max(best, lowest);
    }
    fit[xs[i]] = best;
  }
  return fit;
}

double squared_error(const IsotonicMap& map, const std::vector<double>& preds, const std::vector<double>& golds) {
  double total = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) total += std::pow(map(preds[i]) - golds[i], 2);
  return total;
}

TEST(IsotonicFit, PoolsSingleViolator) {
  const std::vector<double> p{1, 2, 3}, g{1, 3, 2};
  const IsotonicMap map = fit_isotonic(p, g);
  EXPECT_DOUBLE_EQ(map(1), 1.0);
  EXPECT_DOUBLE_EQ(map(2), 2.5);
  EXPECT_DOUBLE_EQ(map(3), 2.5);
}

TEST(IsotonicFit, MonotoneGoldsAreReproducedExactly) {
  const std::vector<double> p{-1, 0, 0.5, 2}, g{-3, -0.25, 1, 2.75};
  const IsotonicMap map = fit_isotonic(p, g);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(map(p[i]), g[i]);
}

TEST(IsotonicFit, ConstantGoldsGiveConstantMap) {
  const std::vector<double> p{3, -1, 0, 7}, g{1.5, 1.5, 1.5, 1.5};
  const IsotonicMap map = fit_isotonic(p, g);
  for (double x : {-100.0, -1.0, 0.3, 7.0, 100.0}) EXPECT_EQ(map(x), 1.5);
}

TEST(IsotonicFit, TiesAreMergedBeforePooling) {
  const std::vector<double> p{1, 1, 2}, g{0, 2, 3};
  const IsotonicMap map = fit_isotonic(p, g);
  EXPECT_DOUBLE_EQ(map(1), 1.0);
  EXPECT_DOUBLE_EQ(map(2), 3.0);
}

TEST(IsotonicFit, RejectsBadInput) {
  const std::vector<double> empty;
  EXPECT_THROW(fit_isotonic(empty, empty), std::invalid_argument);
  const std::vector<double> a{1, 2}, b{1};
  EXPECT_THROW(fit_isotonic(a, b), DimensionError);
}

TEST(IsotonicMapApply, ClampsAndSteps) {
  const IsotonicMap map({0.0, 1.0, 2.0}, {-1.0, 0.5, 2.0});
  EXPECT_EQ(map(-5.0), -1.0);
  EXPECT_EQ(map(0.0), -1.0);
  EXPECT_EQ(map(0.999), -1.0);
  EXPECT_EQ(map(1.0), 0.5);
  EXPECT_EQ(map(1.5), 0.5);
  EXPECT_EQ(map(2.0), 2.0);
  EXPECT_EQ(map(50.0), 2.0);
  EXPECT_EQ(apply_calibration(map, 1.2), 0.5);
}

TEST(IsotonicMapApply, ConstructorValidates) {
  EXPECT_THROW(IsotonicMap({1.0, 1.0}, {0.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(IsotonicMap({1.0, 2.0}, {1.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(IsotonicMap({1.0}, {0.0, 1.0}), std::invalid_argument);
}

TEST(IsotonicMapJson, RoundTrips) {
  const std::vector<double> p{0.1, -2.3, 1.7, 0.4, 2.9}, g{0.5, -3, 2.25, -1, 3};
  const IsotonicMap map = fit_isotonic(p, g);
  const auto j = map.to_json();
  ASSERT_TRUE(j.is_array());
  ASSERT_EQ(j[0].size(), 2u);
  const IsotonicMap back = IsotonicMap::from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.breakpoints(), map.breakpoints());
  EXPECT_EQ(back.values(), map.values());
  EXPECT_THROW(IsotonicMap::from_json(nlohmann::json::parse("[[1,2],[0,3]]")), DataError);
  EXPECT_THROW(IsotonicMap::from_json(nlohmann::json::parse("{\"a\":1}")), DataError);
}

class IsotonicProperty : public ::testing::TestWithParam<int> {};

TEST_P(IsotonicProperty, MatchesMinMaxOracleAndInvariants) {
  std::mt19937_64 rng(static_cast<std::uint64_t>(GetParam()));
  std::uniform_int_distribution<int> size(1, 12);
  std::uniform_int_distribution<int> grid(-4, 4);
  std::uniform_real_distribution<double> label(-3.0, 3.0);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = size(rng);
    std::vector<double> p, g;
    for (int i = 0; i < n; ++i) {
      p.push_back(0.5 * grid(rng));  // coarse grid produces ties
      g.push_back(label(rng));
    }
    const IsotonicMap map = fit_isotonic(p, g);
    for (const auto& [x, y] : minmax_fit(p, g)) EXPECT_NEAR(map(x), y, 1e-9);

    const double lo = *std::min_element(g.begin(), g.end());
    const double hi = *std::max_element(g.begin(), g.end());
    double previous = -std::numeric_limits<double>::infinity();
    for (double x = -3.0; x <= 3.0; x += 0.05) {
      const double y = map(x);
      EXPECT_GE(y, previous);
      EXPECT_GE(y, lo - 1e-12);
      EXPECT_LE(y, hi + 1e-12);
      previous = y;
    }
    // Ranks never flip.
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (p[i] < p[j]) EXPECT_LE(map(p[i]), map(p[j]));
      }
    }
    // Squared error on the fitting data never exceeds that of the best
    // constant or of the raw predictions.
    const double fitted = squared_error(map, p, g);
    double mean = 0;
    for (double v : g) mean += v;
    mean /= n;
    double constant = 0, raw = 0;
    for (int i = 0; i < n; ++i) {
      constant += std::pow(mean - g[i], 2);
      raw += std::pow(p[i] - g[i], 2);
    }
    EXPECT_LE(fitted, constant + 1e-9);
    EXPECT_LE(fitted, raw + 1e-9);
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, IsotonicProperty, ::testing::Range(1, 6));

TEST(IsotonicProperty, AbsoluteErrorCanGrowOnFittingData) {
  // Least squares is not least absolute deviation: equal predictions with
  // golds {0, 0, 10} pool to 10/3.
  const std::vector<double> p{1, 1, 1}, g{0, 0, 10};
  const IsotonicMap map = fit_isotonic(p, g);
  double calibrated = 0, raw = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    calibrated += std::abs(map(p[i]) - g[i]);
    raw += std::abs(p[i] - g[i]);
  }
  EXPECT_NEAR(map(1), 10.0 / 3.0, 1e-12);
  EXPECT_GT(calibrated, raw);
  EXPECT_NEAR(raw, 11.0, 1e-12);
  EXPECT_NEAR(calibrated, 40.0 / 3.0, 1e-12);
}

TEST(IsotonicFit, CalibratedOutputsStayInLabelRange) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 2.0);
  std::uniform_real_distribution<double> label(-3.0, 3.0);
  std::vector<double> p, g;
  for (int i = 0; i < 300; ++i) {
    g.push_back(label(rng));
    p.push_back(g.back() + noise(rng));
  }
  const IsotonicMap map = fit_isotonic(p, g);
  for (double x = -20; x <= 20; x += 0.1) {
    EXPECT_LE(map(x), 3.0);
    EXPECT_GE(map(x), -3.0);
  }
}

}  // namespace
}  // namespace factuality::calibration
