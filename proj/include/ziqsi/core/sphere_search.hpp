#pragma once

// Derivative-free minimization over the half sphere
//   { beta in R^p : ||beta||_2 = 1, beta_1 >= 0 }.
//
// The search runs Nelder-Mead on the p - 1 hyperspherical angles of beta.
// Points whose first coordinate comes out negative are mapped to -beta, which
// is the representative of the same index direction inside the half sphere.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <type_traits>
#include <utility>
#include <vector>

#include "ziqsi/error.hpp"

namespace ziqsi {

struct SphereSearchOptions {
  double initial_step = 0.1;   // radians
  double f_tolerance = 1e-6;   // simplex objective spread
  double x_tolerance = std::numeric_limits<double>::infinity();  // optional bound on the simplex radius (radians)
  int max_evaluations = 3000;  // per Nelder-Mead run
  int restarts = 3;
  int max_step_shrinks = 30;   // retries when the initial simplex hits non-finite values
};

struct SphereSearchResult {
  Eigen::VectorXd beta;
  double objective = 0.0;
  int evaluations = 0;
  int restarts_used = 0;
};

/// Normalizes and flips so the first coordinate is non-negative.
inline Eigen::VectorXd to_half_sphere(Eigen::VectorXd beta) {
  const double norm = beta.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw UsageError("to_half_sphere: vector must be finite and non-zero");
  }
  beta /= norm;
  if (beta[0] < 0.0) beta = -beta;
  if (beta[0] == 0.0) beta[0] = 0.0;  // drop the sign of -0
  return beta;
}

inline Eigen::VectorXd angles_from_unit(const Eigen::VectorXd& beta) {
  const Eigen::Index p = beta.size();
  Eigen::VectorXd angles(p - 1);
  for (Eigen::Index j = 0; j + 2 < p; ++j) {
    angles[j] = std::atan2(beta.tail(p - j - 1).norm(), beta[j]);
  }
  angles[p - 2] = std::atan2(beta[p - 1], beta[p - 2]);
  return angles;
}

inline Eigen::VectorXd unit_from_angles(const Eigen::VectorXd& angles) {
  const Eigen::Index p = angles.size() + 1;
  Eigen::VectorXd beta(p);
  double sine_product = 1.0;
  for (Eigen::Index j = 0; j + 1 < p; ++j) {
    beta[j] = sine_product * std::cos(angles[j]);
    sine_product *= std::sin(angles[j]);
  }
  beta[p - 1] = sine_product;
  return to_half_sphere(std::move(beta));
}

namespace detail {

template <class F>
struct NelderMeadRun {
  F& f;
  const SphereSearchOptions& opt;
  int evaluations = 0;

  double eval(const Eigen::VectorXd& angles) {
    ++evaluations;
    const double v = f(unit_from_angles(angles));
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  }

  // Returns the best vertex; `best_value` receives its objective.
  Eigen::VectorXd run(const Eigen::VectorXd& start, double start_value, double& best_value) {
    const Eigen::Index dim = start.size();
    std::vector<Eigen::VectorXd> x(dim + 1, start);
    std::vector<double> fx(dim + 1, start_value);

    double step = opt.initial_step;
    for (int attempt = 0;; ++attempt) {
      bool finite = true;
      for (Eigen::Index j = 0; j < dim; ++j) {
        x[j + 1] = start;
        x[j + 1][j] += step;
        fx[j + 1] = eval(x[j + 1]);
        finite = finite && std::isfinite(fx[j + 1]);
      }
      if (finite) break;
      if (attempt >= opt.max_step_shrinks) {
        throw NumericalError("minimize_on_sphere: objective is non-finite around the start point");
      }
      step *= 0.5;
    }

    std::vector<std::size_t> order(dim + 1);
    const int budget = evaluations + opt.max_evaluations;
    Eigen::VectorXd centroid(dim), xr(dim), xe(dim), xc(dim);

    while (evaluations < budget) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
      {
        std::vector<Eigen::VectorXd> xs(dim + 1);
        std::vector<double> fs(dim + 1);
        for (std::size_t i = 0; i < order.size(); ++i) {
          xs[i] = std::move(x[order[i]]);
          fs[i] = fx[order[i]];
        }
        x = std::move(xs);
        fx = std::move(fs);
      }

      double radius = 0.0;
      for (Eigen::Index j = 1; j <= dim; ++j) radius = std::max(radius, (x[j] - x[0]).cwiseAbs().maxCoeff());
      if (fx[dim] - fx[0] <= opt.f_tolerance && radius <= opt.x_tolerance) break;

      centroid.setZero();
      for (Eigen::Index j = 0; j < dim; ++j) centroid += x[j];
      centroid /= static_cast<double>(dim);

      xr = centroid + (centroid - x[dim]);
      const double fr = eval(xr);
      if (fr < fx[0]) {
        xe = centroid + 2.0 * (centroid - x[dim]);
        const double fe = eval(xe);
        if (fe < fr) {
          x[dim] = xe;
          fx[dim] = fe;
        } else {
          x[dim] = xr;
          fx[dim] = fr;
        }
        continue;
      }
      if (fr < fx[dim - 1]) {
        x[dim] = xr;
        fx[dim] = fr;
        continue;
      }
      if (fr < fx[dim]) {
        xc = centroid + 0.5 * (xr - centroid);
        const double fc = eval(xc);
        if (fc <= fr) {
          x[dim] = xc;
          fx[dim] = fc;
          continue;
        }
      } else {
        xc = centroid + 0.5 * (x[dim] - centroid);
        const double fc = eval(xc);
        if (fc < fx[dim]) {
          x[dim] = xc;
          fx[dim] = fc;
          continue;
        }
      }
      // Shrink toward the best vertex.
      for (Eigen::Index j = 1; j <= dim; ++j) {
        x[j] = x[0] + 0.5 * (x[j] - x[0]);
        fx[j] = eval(x[j]);
      }
    }

    const auto best = static_cast<std::size_t>(std::min_element(fx.begin(), fx.end()) - fx.begin());
    best_value = fx[best];
    return x[best];
  }
};

}  // namespace detail

/// Minimizes `objective` over unit vectors with non-negative first coordinate,
/// starting from `init`. The returned objective never exceeds objective(init).
template <class Objective>
SphereSearchResult minimize_on_sphere(Objective&& objective, const Eigen::VectorXd& init,
                                      const SphereSearchOptions& options = {}) {
  const Eigen::Index p = init.size();
  require(p >= 2, "minimize_on_sphere: dimension must be at least 2");
  require(init.allFinite() && std::abs(init.norm() - 1.0) < 1e-8 && init[0] >= -1e-12,
          "minimize_on_sphere: init must be a unit vector with non-negative first coordinate");

  const Eigen::VectorXd start = to_half_sphere(init);
  const double start_value = objective(start);
  if (!std::isfinite(start_value)) {
    throw NumericalError("minimize_on_sphere: objective is non-finite at the initial point");
  }

  detail::NelderMeadRun<std::remove_reference_t<Objective>> nm{objective, options};
  SphereSearchResult result;
  result.beta = start;
  result.objective = start_value;

  Eigen::VectorXd angles = angles_from_unit(start);
  double value = start_value;
  for (int round = 0; round <= options.restarts; ++round) {
    double found = 0.0;
    Eigen::VectorXd next = nm.run(angles, value, found);
    const bool improved = found < value - options.f_tolerance;
    if (found < value) {
      angles = std::move(next);
      value = found;
      result.beta = unit_from_angles(angles);
      result.objective = found;
    }
    if (round > 0) ++result.restarts_used;
    if (round > 0 && !improved) break;
  }
  result.evaluations = nm.evaluations + 1;
  return result;
}

}  // namespace ziqsi
