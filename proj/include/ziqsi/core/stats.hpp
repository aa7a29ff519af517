#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ziqsi/error.hpp"

namespace ziqsi {

/// Empirical quantile with linear interpolation between order statistics.
inline double empirical_quantile(std::vector<double> values, double prob) {
  require(!values.empty(), "empirical_quantile: empty sample");
  require(prob >= 0.0 && prob <= 1.0, "empirical_quantile: probability must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace ziqsi
