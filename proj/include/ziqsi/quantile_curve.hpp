#pragma once

// The two-part conditional quantile function
//
//   Q(tau | x) = 0                                   tau <  1 - pi(x)
//              = A(x) (tau - (1 - pi(x))) / n^-delta    tau <= 1 - pi(x) + n^-delta
//              = G_{tau_s}(x' beta_{tau_s})             otherwise,
//
// with tau_s = Gamma(tau; x) and A(x) the positive-part prediction at the
// right end of the interpolation band. Positive-part fits live on a grid of
// levels; predictions between grid levels are interpolated linearly in tau_s.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ziqsi/core/parallel.hpp"
#include "ziqsi/error.hpp"
#include "ziqsi/single_index.hpp"
#include "ziqsi/zero_model.hpp"

namespace ziqsi {

enum class Region { zero, interpolation, positive };

inline const char* to_string(Region r) {
  switch (r) {
    case Region::zero: return "zero";
    case Region::interpolation: return "interpolation";
    case Region::positive: return "positive";
  }
  return "unknown";
}

struct QuantilePrediction {
  double value = 0.0;
  Region region = Region::zero;
  double tau_s_used = 0.0;
};

/// 0.01, 0.02, ..., 0.99.
inline std::vector<double> default_grid() {
  std::vector<double> levels;
  levels.reserve(99);
  for (int k = 1; k <= 99; ++k) levels.push_back(k / 100.0);
  return levels;
}

inline void validate_grid(const std::vector<double>& levels) {
  require(!levels.empty(), "grid: at least one level is required");
  for (std::size_t k = 0; k < levels.size(); ++k) {
    require_level(levels[k], "grid level");
    require(k == 0 || levels[k] > levels[k - 1], "grid: levels must be strictly increasing");
  }
}

/// Linear interpolation of value_at(k) between the grid levels bracketing
/// `level`; levels outside the grid use the nearest end.
template <class ValueAt>
double interpolate_on_grid(const std::vector<double>& levels, double level, ValueAt&& value_at) {
  if (level <= levels.front()) return value_at(std::size_t{0});
  if (level >= levels.back()) return value_at(levels.size() - 1);
  const auto hi = static_cast<std::size_t>(std::upper_bound(levels.begin(), levels.end(), level) - levels.begin());
  const std::size_t lo = hi - 1;
  if (level == levels[lo]) return value_at(lo);
  const double w = (level - levels[lo]) / (levels[hi] - levels[lo]);
  return (1.0 - w) * value_at(lo) + w * value_at(hi);
}

struct CurveRegions {
  double change_point = 0.0;  // 1 - pi
  double width = 0.0;         // n^-delta
  double upper = 0.0;         // change_point + width

  Region classify(double tau) const noexcept {
    if (tau < change_point) return Region::zero;
    if (tau <= upper) return Region::interpolation;
    return Region::positive;
  }
};

inline CurveRegions curve_regions(double pi, int n_total, double delta) {
  CurveRegions r;
  r.change_point = 1.0 - pi;
  r.width = std::pow(static_cast<double>(n_total), -delta);
  r.upper = r.change_point + r.width;
  return r;
}

/// Three-region assembly. `positive_at(tau_s)` evaluates the positive-part
/// quantile prediction at nominal level tau_s.
template <class PositiveAt>
QuantilePrediction assemble_quantile(double tau, double pi, int n_total, double delta, PositiveAt&& positive_at) {
  require_level(tau);
  const CurveRegions regions = curve_regions(pi, n_total, delta);
  QuantilePrediction out;
  out.region = regions.classify(tau);
  switch (out.region) {
    case Region::zero:
      out.value = 0.0;
      out.tau_s_used = 0.0;
      break;
    case Region::interpolation: {
      const double anchor_level = std::max((regions.upper - regions.change_point) / pi, 0.0);
      const double anchor = positive_at(anchor_level);
      out.value = anchor * ((tau - regions.change_point) / regions.width);
      if (out.value == 0.0) out.value = 0.0;
      out.tau_s_used = anchor_level;
      break;
    }
    case Region::positive:
      out.tau_s_used = gamma_map(tau, pi);
      out.value = positive_at(out.tau_s_used);
      break;
  }
  return out;
}

/// Steps at which a curve evaluated on increasing levels goes down. Crossing
/// is possible for every estimator here and is reported, never corrected.
inline std::size_t count_crossings(const std::vector<double>& values) {
  std::size_t count = 0;
  for (std::size_t k = 1; k < values.size(); ++k) count += values[k] < values[k - 1] ? 1 : 0;
  return count;
}

struct ZiqsiConfig {
  double delta = 0.499;
  int order = 4;
  std::vector<double> grid = default_grid();
  std::optional<int> interior_knots;  // fixed N; BIC selection when empty
  int threads = 1;
  SphereSearchOptions search;
  QrOptions qr;
  LogisticOptions logistic;
};

inline void validate_delta(double delta) {
  require(delta > 0.0 && delta < 0.5, "delta must lie in (0, 0.5)");
}

struct ZiqsiModel {
  ZeroModel zero;
  std::vector<double> grid_levels;
  std::vector<SingleIndexFit> grid_fits;
  double delta = 0.499;
  int n_total = 0;
  int order = 4;
  int interior_knots = 1;
  std::optional<KnotSelection> knot_selection;
  std::vector<std::string> covariate_names;

  Eigen::Index covariate_count() const { return zero.covariate_count(); }

  /// Positive-part prediction at nominal level tau_s (grid-interpolated).
  double positive_part(const Eigen::Ref<const Eigen::VectorXd>& x, double tau_s) const {
    return interpolate_on_grid(grid_levels, tau_s, [&](std::size_t k) { return grid_fits[k].predict(x); });
  }

  std::size_t degenerate_fit_count() const {
    return static_cast<std::size_t>(std::count_if(grid_fits.begin(), grid_fits.end(), [](const SingleIndexFit& f) {
      return f.status == QrStatus::degenerate;
    }));
  }
};

namespace detail {

inline Eigen::VectorXd positive_indicator(const Eigen::Ref<const Eigen::VectorXd>& y) {
  Eigen::VectorXd z(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) z[i] = y[i] > 0.0 ? 1.0 : 0.0;
  return z;
}

inline void validate_two_part_data(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                   const Eigen::Ref<const Eigen::VectorXd>& y) {
  require(X.rows() == y.size(), "fit: covariate rows and response length differ");
  require(X.allFinite(), "fit: covariates must be finite");
  Eigen::Index zeros = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    require(std::isfinite(y[i]) && y[i] >= 0.0, "fit: responses must be finite and non-negative");
    zeros += y[i] == 0.0 ? 1 : 0;
  }
  if (zeros == 0) {
    throw UsageError(
        "fit: every response is positive, so the two-part model degenerates; "
        "fit the plain quantile single-index model instead (method qsi)");
  }
  if (zeros == y.size()) throw UsageError("fit: every response is zero; nothing to model in the positive part");
}

}  // namespace detail

/// Chooses N: a pilot fit at tau_s = 0.5 with the default knot count supplies
/// beta, then BIC picks N with that beta held fixed.
inline std::pair<int, std::optional<KnotSelection>> choose_knots(const IndexProblem& problem, int order,
                                                                 const SingleIndexOptions& options,
                                                                 Eigen::VectorXd* pilot_beta = nullptr) {
  const int pilot_N = default_knot_count(problem.n(), order);
  SingleIndexFit pilot = fit_single_index(problem, 0.5, pilot_N, options);
  KnotSelection selection = select_knots(problem, 0.5, pilot.beta, order, std::nullopt, options.qr);
  if (pilot_beta) *pilot_beta = pilot.beta;
  return {selection.chosen_N, std::move(selection)};
}

/// Fits the single-index quantile model at every level, in parallel.
inline std::vector<SingleIndexFit> fit_grid(const IndexProblem& problem, const std::vector<double>& levels,
                                            int interior_knots, const SingleIndexOptions& options, int threads) {
  std::vector<SingleIndexFit> fits(levels.size());
  parallel_for(levels.size(), threads,
               [&](std::size_t k) { fits[k] = fit_single_index(problem, levels[k], interior_knots, options); });
  return fits;
}

inline ZiqsiModel fit_ziqsi(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                            const ZiqsiConfig& config = {}) {
  validate_delta(config.delta);
  validate_grid(config.grid);
  require(config.order >= 2, "fit: spline order must be at least 2");
  detail::validate_two_part_data(X, y);

  ZiqsiModel model;
  model.delta = config.delta;
  model.order = config.order;
  model.grid_levels = config.grid;
  model.n_total = static_cast<int>(y.size());
  model.zero = fit_logistic(X, detail::positive_indicator(y), config.logistic);

  const IndexProblem problem = IndexProblem::positive_part(X, y);
  SingleIndexOptions options;
  options.order = config.order;
  options.search = config.search;
  options.qr = config.qr;

  if (config.interior_knots) {
    require(*config.interior_knots >= 0, "fit: interior knot count must be non-negative");
    model.interior_knots = *config.interior_knots;
  } else {
    Eigen::VectorXd pilot_beta;
    auto [chosen, selection] = choose_knots(problem, config.order, options, &pilot_beta);
    model.interior_knots = chosen;
    model.knot_selection = std::move(selection);
    options.extra_starts.push_back(pilot_beta);
  }
  const Eigen::Index needed = model.interior_knots + config.order + X.cols();
  if (problem.n() < needed) {
    throw UsageError("fit: " + std::to_string(problem.n()) + " positive responses, need at least " +
                     std::to_string(needed));
  }
  model.grid_fits = fit_grid(problem, model.grid_levels, model.interior_knots, options, config.threads);
  return model;
}

inline QuantilePrediction predict_quantile(const ZiqsiModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                                           double tau) {
  require(x.size() == model.covariate_count(), "predict: covariate dimension mismatch");
  const double pi = positive_probability(model.zero, x);
  return assemble_quantile(tau, pi, model.n_total, model.delta,
                           [&](double tau_s) { return model.positive_part(x, tau_s); });
}

template <class Model>
std::vector<QuantilePrediction> predict_curve(const Model& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                                              const std::vector<double>& taus) {
  std::vector<QuantilePrediction> out;
  out.reserve(taus.size());
  for (double tau : taus) out.push_back(predict_quantile(model, x, tau));
  return out;
}

}  // namespace ziqsi
