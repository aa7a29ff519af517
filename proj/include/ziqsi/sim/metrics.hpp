#pragma once

// Relatively integrated error measures of an estimated quantile curve at a
// fixed covariate profile, over replicate fits:
//
//   RIMSE  = sum_t E(Qhat - Q)^2    / sum_t Q^2
//   RIBIAS = sum_t (E Qhat - Q)^2   / sum_t Q^2
//   RIVAR  = sum_t E(Qhat - E Qhat)^2 / sum_t Q^2
//
// Expectations are replicate means (divisor R), so RIMSE = RIBIAS + RIVAR.
// All three are reported in percent.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ziqsi/core/stats.hpp"
#include "ziqsi/error.hpp"

namespace ziqsi::sim {

struct McReport {
  std::string method;
  std::string profile;
  int replicates = 0;
  double ribias = 0.0;
  double rivar = 0.0;
  double rimse = 0.0;
  double negative_fraction = 0.0;  // share of predicted values below zero
  std::vector<double> taus;
  std::vector<double> oracle;
  std::vector<double> mean_curve;
  std::vector<double> lower_band;  // 2.5% replicate percentile
  std::vector<double> upper_band;  // 97.5% replicate percentile
};

/// `curves[r][t]` is replicate r's prediction at taus[t].
inline McReport evaluate_metrics(const std::vector<std::vector<double>>& curves, const std::vector<double>& oracle,
                                 const std::vector<double>& taus) {
  require(curves.size() >= 2, "evaluate_metrics: need at least two replicate curves");
  require(oracle.size() == taus.size(), "evaluate_metrics: oracle and tau grid lengths differ");
  const std::size_t T = taus.size();
  for (const auto& c : curves) require(c.size() == T, "evaluate_metrics: replicate curve has the wrong length");

  double denom = 0.0;
  for (double q : oracle) denom += q * q;
  if (!(denom > 0.0)) throw NumericalError("evaluate_metrics: oracle curve is identically zero");

  const double R = static_cast<double>(curves.size());
  McReport out;
  out.replicates = static_cast<int>(curves.size());
  out.taus = taus;
  out.oracle = oracle;
  out.mean_curve.resize(T);
  out.lower_band.resize(T);
  out.upper_band.resize(T);

  double bias = 0.0, var = 0.0, mse = 0.0;
  std::size_t negatives = 0;
  std::vector<double> column(curves.size());
  for (std::size_t t = 0; t < T; ++t) {
    double mean = 0.0;
    for (std::size_t r = 0; r < curves.size(); ++r) {
      column[r] = curves[r][t];
      mean += column[r];
      negatives += column[r] < 0.0 ? 1 : 0;
    }
    mean /= R;
    double v = 0.0, m = 0.0;
    for (double q : column) {
      v += (q - mean) * (q - mean);
      m += (q - oracle[t]) * (q - oracle[t]);
    }
    bias += (mean - oracle[t]) * (mean - oracle[t]);
    var += v / R;
    mse += m / R;
    out.mean_curve[t] = mean;
    out.lower_band[t] = empirical_quantile(column, 0.025);
    out.upper_band[t] = empirical_quantile(column, 0.975);
  }
  out.ribias = 100.0 * bias / denom;
  out.rivar = 100.0 * var / denom;
  out.rimse = 100.0 * mse / denom;
  out.negative_fraction = static_cast<double>(negatives) / (R * static_cast<double>(T));
  return out;
}

}  // namespace ziqsi::sim
