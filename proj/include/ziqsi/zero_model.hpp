#pragma once

// Logistic model for P(Y > 0 | x) and the remap of a target quantile level of
// Y to the matching level of Y | Y > 0.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "ziqsi/error.hpp"

namespace ziqsi {

enum class LogisticStatus { converged, separated, max_iter };

inline const char* to_string(LogisticStatus s) {
  switch (s) {
    case LogisticStatus::converged: return "converged";
    case LogisticStatus::separated: return "separated";
    case LogisticStatus::max_iter: return "max_iter";
  }
  return "unknown";
}

struct LogisticOptions {
  double gradient_tolerance = 1e-10;
  int max_iterations = 50;
  double separation_norm = 30.0;
};

struct ZeroModel {
  Eigen::VectorXd gamma;  // intercept first, then one slope per covariate
  bool converged = false;
  int iterations = 0;
  LogisticStatus status = LogisticStatus::max_iter;

  Eigen::Index covariate_count() const { return gamma.size() - 1; }

  double linear_predictor(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return gamma[0] + x.dot(gamma.tail(gamma.size() - 1));
  }
};

/// Numerically stable logistic function.
inline double logistic(double eta) noexcept {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

/// P(Y > 0 | x) under the fitted zero model.
inline double positive_probability(const ZeroModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  require(x.size() == model.covariate_count(), "positive_probability: covariate dimension mismatch");
  return logistic(model.linear_predictor(x));
}

/// tau_s = max((tau - (1 - pi)) / pi, 0).
inline double gamma_map(double tau, double pi) {
  require_level(tau);
  const double tau_s = (tau - (1.0 - pi)) / pi;
  return tau_s > 0.0 ? tau_s : 0.0;
}

inline double gamma_map(double tau, const Eigen::Ref<const Eigen::VectorXd>& x, const ZeroModel& model) {
  return gamma_map(tau, positive_probability(model, x));
}

namespace detail {

inline double bernoulli_loglik(const Eigen::VectorXd& eta, const Eigen::VectorXd& z) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    // z * eta - log(1 + e^eta), written to avoid overflow.
    const double e = eta[i];
    const double log1pexp = e > 0.0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    total += z[i] * e - log1pexp;
  }
  return total;
}

}  // namespace detail

/// Bernoulli log-likelihood of `gamma` (intercept first) for the indicator `z`.
inline double logistic_loglik(const Eigen::Ref<const Eigen::MatrixXd>& covariates,
                              const Eigen::Ref<const Eigen::VectorXd>& z,
                              const Eigen::Ref<const Eigen::VectorXd>& gamma) {
  const Eigen::VectorXd eta =
      (covariates * gamma.tail(gamma.size() - 1)).array() + gamma[0];
  return detail::bernoulli_loglik(eta, z);
}

/// Newton-Raphson maximum likelihood for logit P(z = 1 | x) = gamma_0 + x'gamma.
/// Separation (||gamma|| > 30) returns the last iterate with status separated.
inline ZeroModel fit_logistic(const Eigen::Ref<const Eigen::MatrixXd>& covariates,
                              const Eigen::Ref<const Eigen::VectorXd>& positive,
                              const LogisticOptions& options = {}) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  const Eigen::Index n = covariates.rows();
  const Eigen::Index p = covariates.cols();
  require(positive.size() == n, "fit_logistic: indicator length does not match covariate rows");
  require(n > p + 1, "fit_logistic: need more observations than parameters");
  Eigen::Index ones = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    require(positive[i] == 0.0 || positive[i] == 1.0, "fit_logistic: indicator must be 0/1");
    ones += positive[i] == 1.0 ? 1 : 0;
  }
  if (ones == 0 || ones == n) {
    throw UsageError("fit_logistic: indicator contains a single class; the zero model is not identifiable");
  }

  MatrixXd design(n, p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = covariates;

  ZeroModel model;
  model.gamma = VectorXd::Zero(p + 1);
  VectorXd eta = VectorXd::Zero(n);
  double loglik = detail::bernoulli_loglik(eta, positive);
  VectorXd prob(n), weights(n), gradient(p + 1);
  MatrixXd hessian(p + 1, p + 1);

  for (int iter = 0; iter <= options.max_iterations; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) {
      prob[i] = logistic(eta[i]);
      weights[i] = prob[i] * (1.0 - prob[i]);
    }
    gradient.noalias() = design.transpose() * (positive - prob);
    model.iterations = iter;
    if (gradient.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
      model.converged = true;
      model.status = LogisticStatus::converged;
      return model;
    }
    if (iter == options.max_iterations) break;

    hessian.noalias() = design.transpose() * weights.asDiagonal() * design;
    Eigen::LDLT<MatrixXd> ldlt(hessian);
    VectorXd step = ldlt.solve(gradient);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) break;
    // Gradient is at its rounding floor when Newton cannot move gamma.
    if (step.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + model.gamma.lpNorm<Eigen::Infinity>())) {
      model.converged = true;
      model.status = LogisticStatus::converged;
      return model;
    }

    // Step halving keeps the likelihood monotone.
    double scale = 1.0;
    VectorXd candidate;
    double candidate_loglik = loglik;
    VectorXd candidate_eta;
    for (int half = 0; half < 30; ++half) {
      candidate = model.gamma + scale * step;
      candidate_eta.noalias() = design * candidate;
      candidate_loglik = detail::bernoulli_loglik(candidate_eta, positive);
      if (candidate_loglik >= loglik - 1e-12 * std::abs(loglik)) break;
      scale *= 0.5;
    }
    if (!(candidate_loglik >= loglik - 1e-12 * std::abs(loglik))) break;  // no progress possible
    model.gamma = candidate;
    eta = candidate_eta;
    loglik = candidate_loglik;

    if (model.gamma.norm() > options.separation_norm) {
      model.iterations = iter + 1;
      model.converged = false;
      model.status = LogisticStatus::separated;
      return model;
    }
  }
  model.converged = false;
  model.status = LogisticStatus::max_iter;
  return model;
}

}  // namespace ziqsi
