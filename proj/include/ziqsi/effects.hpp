#pragma once

// Average quantile effect of one covariate:
//   (1/n) sum_i [ Q(tau | x_ij = u, x_i(-j)) - Q(tau | x_ij = v, x_i(-j)) ].

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "ziqsi/core/parallel.hpp"
#include "ziqsi/core/stats.hpp"
#include "ziqsi/error.hpp"
#include "ziqsi/sim/rng.hpp"

namespace ziqsi {

struct AqeResult {
  Eigen::Index covariate = 0;  // zero-based column
  double level_u = 0.0;
  double level_v = 0.0;
  double tau = 0.5;
  double estimate = 0.0;
  Eigen::Index n_averaged = 0;
};

template <class Model>
AqeResult compute_aqe(const Model& model, const Eigen::Ref<const Eigen::MatrixXd>& X_eval, Eigen::Index j, double u,
                      double v, double tau) {
  require(j >= 0 && j < X_eval.cols(), "aqe: covariate index out of range");
  require(X_eval.rows() > 0, "aqe: evaluation sample is empty");
  require_level(tau);
  AqeResult out{j, u, v, tau, 0.0, X_eval.rows()};
  Eigen::VectorXd x_u(X_eval.cols()), x_v(X_eval.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < X_eval.rows(); ++i) {
    x_u = X_eval.row(i).transpose();
    x_v = x_u;
    x_u[j] = u;
    x_v[j] = v;
    total += predict_quantile(model, x_u, tau).value - predict_quantile(model, x_v, tau).value;
  }
  out.estimate = total / static_cast<double>(X_eval.rows());
  return out;
}

struct AqeBootstrap {
  AqeResult point;
  std::vector<double> replicates;  // failed refits are skipped
  double standard_error = 0.0;
  double lower = 0.0;  // 2.5% percentile
  double upper = 0.0;  // 97.5% percentile
  int failures = 0;
};

/// Row-resampling bootstrap of the AQE: resample (x, y) rows, refit with
/// `fit(X, y)`, and evaluate on the resampled covariates. Heuristic; the
/// percentile interval carries no coverage guarantee.
template <class Fit>
AqeBootstrap bootstrap_aqe(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                           Fit&& fit, Eigen::Index j, double u, double v, double tau, int resamples,
                           std::uint64_t seed, int threads = 1) {
  require(resamples >= 2, "aqe bootstrap: need at least two resamples");
  AqeBootstrap out;
  out.point = compute_aqe(fit(X, y), X, j, u, v, tau);

  std::vector<double> draws(static_cast<std::size_t>(resamples), 0.0);
  std::vector<char> ok(static_cast<std::size_t>(resamples), 0);
  parallel_for(draws.size(), threads, [&](std::size_t b) {
    sim::CounterRng rng(seed, sim::stream_id(b, sim::Purpose::bootstrap));
    Eigen::MatrixXd Xb(X.rows(), X.cols());
    Eigen::VectorXd yb(y.size());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const auto r = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(X.rows())));
      Xb.row(i) = X.row(r);
      yb[i] = y[r];
    }
    try {
      draws[b] = compute_aqe(fit(Xb, yb), Xb, j, u, v, tau).estimate;
      ok[b] = 1;
    } catch (const std::exception&) {
      ok[b] = 0;
    }
  });
  for (std::size_t b = 0; b < draws.size(); ++b) {
    if (ok[b]) {
      out.replicates.push_back(draws[b]);
    } else {
      ++out.failures;
    }
  }
  if (out.replicates.size() >= 2) {
    const double n = static_cast<double>(out.replicates.size());
    double mean = 0.0;
    for (double d : out.replicates) mean += d;
    mean /= n;
    double ss = 0.0;
    for (double d : out.replicates) ss += (d - mean) * (d - mean);
    out.standard_error = std::sqrt(ss / (n - 1.0));
    out.lower = empirical_quantile(out.replicates, 0.025);
    out.upper = empirical_quantile(out.replicates, 0.975);
  }
  return out;
}

}  // namespace ziqsi
