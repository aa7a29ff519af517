#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace ziqsi {

/// Covariates (categoricals already dummy-coded) and a non-negative response.
struct Dataset {
  std::vector<std::string> covariate_names;
  std::string response_name = "y";
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::size_t dropped_rows = 0;  // rows removed for missing cells at ingestion

  Eigen::Index n() const noexcept { return X.rows(); }
  Eigen::Index p() const noexcept { return X.cols(); }
};

}  // namespace ziqsi
