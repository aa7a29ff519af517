#pragma once

// Comparison estimators:
//  * ZIQ-linear: the same two-part model with a linear quantile regression
//    (intercept + slopes) for the positive part.
//  * QSI: a single-index quantile regression on all observations, with zeros
//    jittered by N(0, 1e-10) noise and no zero part.

#include <Eigen/Dense>

#include <vector>

#include "ziqsi/core/parallel.hpp"
#include "ziqsi/core/quantile_lp.hpp"
#include "ziqsi/quantile_curve.hpp"
#include "ziqsi/sim/rng.hpp"

namespace ziqsi {

struct ZiqLinearModel {
  ZeroModel zero;
  std::vector<double> grid_levels;
  std::vector<Eigen::VectorXd> coefficients;  // intercept first
  std::vector<QrStatus> statuses;
  double delta = 0.499;
  int n_total = 0;
  std::vector<std::string> covariate_names;

  Eigen::Index covariate_count() const { return zero.covariate_count(); }

  double positive_part(const Eigen::Ref<const Eigen::VectorXd>& x, double tau_s) const {
    return interpolate_on_grid(grid_levels, tau_s, [&](std::size_t k) {
      const Eigen::VectorXd& c = coefficients[k];
      return c[0] + x.dot(c.tail(c.size() - 1));
    });
  }
};

inline ZiqLinearModel fit_ziq_linear(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                     const Eigen::Ref<const Eigen::VectorXd>& y, const ZiqsiConfig& config = {}) {
  validate_delta(config.delta);
  validate_grid(config.grid);
  detail::validate_two_part_data(X, y);

  ZiqLinearModel model;
  model.delta = config.delta;
  model.grid_levels = config.grid;
  model.n_total = static_cast<int>(y.size());
  model.zero = fit_logistic(X, detail::positive_indicator(y), config.logistic);

  const IndexProblem positives = IndexProblem::positive_part(X, y);
  require(positives.n() > positives.p() + 1, "fit: too few positive responses for a linear quantile fit");
  Eigen::MatrixXd design(positives.n(), positives.p() + 1);
  design.col(0).setOnes();
  design.rightCols(positives.p()) = positives.X();

  model.coefficients.resize(model.grid_levels.size());
  model.statuses.resize(model.grid_levels.size());
  parallel_for(model.grid_levels.size(), config.threads, [&](std::size_t k) {
    QrSolution sol = fit_linear_quantile(design, positives.y(), model.grid_levels[k], config.qr);
    model.coefficients[k] = std::move(sol.coefficients);
    model.statuses[k] = sol.status;
  });
  return model;
}

inline QuantilePrediction predict_quantile(const ZiqLinearModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                                           double tau) {
  require(x.size() == model.covariate_count(), "predict: covariate dimension mismatch");
  const double pi = positive_probability(model.zero, x);
  return assemble_quantile(tau, pi, model.n_total, model.delta,
                           [&](double tau_s) { return model.positive_part(x, tau_s); });
}

struct QsiModel {
  std::vector<double> grid_levels;
  std::vector<SingleIndexFit> grid_fits;
  int n_total = 0;
  int order = 4;
  int interior_knots = 1;
  std::optional<KnotSelection> knot_selection;
  std::vector<std::string> covariate_names;

  Eigen::Index covariate_count() const { return grid_fits.front().beta.size(); }
};

/// Standard deviation of the jitter added to zero responses (variance 1e-10).
inline constexpr double kQsiJitterSd = 1e-5;

/// Replaces each zero by an independent N(0, 1e-10) draw from `rng`.
inline Eigen::VectorXd jitter_zeros(const Eigen::Ref<const Eigen::VectorXd>& y, sim::CounterRng& rng) {
  Eigen::VectorXd out = y;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (out[i] == 0.0) out[i] = kQsiJitterSd * rng.normal();
  }
  return out;
}

inline QsiModel fit_qsi(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                        const ZiqsiConfig& config, sim::CounterRng& rng) {
  validate_grid(config.grid);
  require(config.order >= 2, "fit: spline order must be at least 2");
  require(X.rows() == y.size(), "fit: covariate rows and response length differ");
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    require(std::isfinite(y[i]) && y[i] >= 0.0, "fit: responses must be finite and non-negative");
  }

  const IndexProblem problem = IndexProblem::all_rows(X, jitter_zeros(y, rng));
  SingleIndexOptions options;
  options.order = config.order;
  options.search = config.search;
  options.qr = config.qr;

  QsiModel model;
  model.grid_levels = config.grid;
  model.n_total = static_cast<int>(y.size());
  model.order = config.order;
  if (config.interior_knots) {
    model.interior_knots = *config.interior_knots;
  } else {
    Eigen::VectorXd pilot_beta;
    auto [chosen, selection] = choose_knots(problem, config.order, options, &pilot_beta);
    model.interior_knots = chosen;
    model.knot_selection = std::move(selection);
    options.extra_starts.push_back(pilot_beta);
  }
  model.grid_fits = fit_grid(problem, model.grid_levels, model.interior_knots, options, config.threads);
  return model;
}

inline QsiModel fit_qsi(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                        const ZiqsiConfig& config, std::uint64_t seed) {
  sim::CounterRng rng(seed, sim::stream_id(0, sim::Purpose::jitter));
  return fit_qsi(X, y, config, rng);
}

/// QSI has no zero part: every level is evaluated directly at tau.
inline QuantilePrediction predict_quantile(const QsiModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                                           double tau) {
  require_level(tau);
  require(x.size() == model.covariate_count(), "predict: covariate dimension mismatch");
  QuantilePrediction out;
  out.region = Region::positive;
  out.tau_s_used = tau;
  out.value = interpolate_on_grid(model.grid_levels, tau, [&](std::size_t k) { return model.grid_fits[k].predict(x); });
  return out;
}

}  // namespace ziqsi
