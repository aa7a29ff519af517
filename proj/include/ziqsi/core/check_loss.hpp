#pragma once

#include <Eigen/Dense>

#include "ziqsi/error.hpp"

namespace ziqsi {

/// Quantile (pinball) loss u * (tau - 1{u < 0}).
inline double check_loss(double u, double tau) noexcept {
  return u * (tau - (u < 0.0 ? 1.0 : 0.0));
}

/// Mean check loss of a residual vector.
inline double mean_check_loss(const Eigen::Ref<const Eigen::VectorXd>& residuals, double tau) {
  if (residuals.size() == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < residuals.size(); ++i) total += check_loss(residuals[i], tau);
  return total / static_cast<double>(residuals.size());
}

}  // namespace ziqsi
