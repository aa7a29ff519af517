#pragma once

// Profile pseudo-likelihood estimation of a single-index quantile model
//
//   Q(tau_s | x, Y > 0) = G(x' beta),  G(u) ~ B(u)' theta,
//
// where theta is profiled out by a linear quantile regression on the spline
// design for each candidate beta, and beta is searched on the half sphere.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ziqsi/bspline.hpp"
#include "ziqsi/core/quantile_lp.hpp"
#include "ziqsi/core/sphere_search.hpp"
#include "ziqsi/error.hpp"

namespace ziqsi {

/// The rows entering the check loss, plus the covariate rows whose index
/// values fix the spline boundary [min x'beta, max x'beta].
class IndexProblem {
 public:
  /// Loss on rows with y > 0; boundary from every row of X.
  static IndexProblem positive_part(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                    const Eigen::Ref<const Eigen::VectorXd>& y) {
    require(X.rows() == y.size(), "IndexProblem: X and y row counts differ");
    Eigen::Index n0 = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) n0 += y[i] > 0.0 ? 1 : 0;
    IndexProblem out;
    out.loss_X_.resize(n0, X.cols());
    out.loss_y_.resize(n0);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (y[i] > 0.0) {
        out.loss_X_.row(r) = X.row(i);
        out.loss_y_[r] = y[i];
        ++r;
      }
    }
    out.boundary_X_ = X;
    return out;
  }

  /// Loss and boundary on every row (no zero part).
  static IndexProblem all_rows(const Eigen::Ref<const Eigen::MatrixXd>& X,
                               const Eigen::Ref<const Eigen::VectorXd>& y) {
    require(X.rows() == y.size(), "IndexProblem: X and y row counts differ");
    IndexProblem out;
    out.loss_X_ = X;
    out.loss_y_ = y;
    out.boundary_X_ = X;
    return out;
  }

  const Eigen::MatrixXd& X() const noexcept { return loss_X_; }
  const Eigen::VectorXd& y() const noexcept { return loss_y_; }
  const Eigen::MatrixXd& boundary_rows() const noexcept { return boundary_X_; }
  Eigen::Index n() const noexcept { return loss_y_.size(); }
  Eigen::Index p() const noexcept { return loss_X_.cols(); }

  std::pair<double, double> index_range(const Eigen::Ref<const Eigen::VectorXd>& beta) const {
    const Eigen::VectorXd u = boundary_X_ * beta;
    double a = u.minCoeff();
    double b = u.maxCoeff();
    if (!(b - a > 1e-12 * (1.0 + std::abs(a)))) {
      // All index values coincide; any interval containing them works.
      a -= 0.5;
      b += 0.5;
    }
    return {a, b};
  }

 private:
  Eigen::MatrixXd loss_X_;
  Eigen::VectorXd loss_y_;
  Eigen::MatrixXd boundary_X_;
};

struct ThetaFit {
  Eigen::VectorXd theta;
  SplineBasis basis;
  double objective = 0.0;
  QrStatus status = QrStatus::converged;
};

/// Inner minimization: spline coefficients for a fixed index direction.
inline ThetaFit fit_theta_given_beta(const IndexProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& beta,
                                     double tau_s, int interior_knots, int order, const QrOptions& qr = {}) {
  require(beta.size() == problem.p(), "fit_theta_given_beta: beta has the wrong dimension");
  require_level(tau_s, "tau_s");
  const int basis_size = interior_knots + order;
  if (problem.n() <= basis_size) {
    throw UsageError("fit_theta_given_beta: " + std::to_string(problem.n()) +
                     " observations cannot support " + std::to_string(basis_size) +
                     " spline coefficients; use fewer interior knots");
  }
  const auto [a, b] = problem.index_range(beta);
  ThetaFit out{Eigen::VectorXd(), SplineBasis(a, b, interior_knots, order), 0.0, QrStatus::converged};
  const Eigen::VectorXd index = problem.X() * beta;
  const Eigen::MatrixXd design = out.basis.design(index);
  QrSolution sol = fit_linear_quantile(design, problem.y(), tau_s, qr);
  out.theta = std::move(sol.coefficients);
  out.objective = sol.objective;
  out.status = sol.status;
  return out;
}

/// Profile pseudo-likelihood of beta.
inline double profile_objective(const IndexProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& beta,
                                double tau_s, int interior_knots, int order, const QrOptions& qr = {}) {
  return fit_theta_given_beta(problem, beta, tau_s, interior_knots, order, qr).objective;
}

struct SingleIndexFit {
  double tau_s = 0.5;
  Eigen::VectorXd beta;
  Eigen::VectorXd theta;
  SplineBasis basis;
  double profile_objective = 0.0;
  int n_positive = 0;
  QrStatus status = QrStatus::converged;
  int evaluations = 0;

  double index(const Eigen::Ref<const Eigen::VectorXd>& x) const { return x.dot(beta); }

  /// G(x' beta); index values outside the training boundary are clamped.
  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    require(x.size() == beta.size(), "SingleIndexFit::predict: covariate dimension mismatch");
    return basis.value(x.dot(beta), theta);
  }
};

struct SingleIndexOptions {
  int order = 4;
  SphereSearchOptions search;
  QrOptions qr;
  std::vector<Eigen::VectorXd> extra_starts;  // candidate initial directions
};

/// Normalized slopes of a linear quantile regression of y on (1, x).
inline Eigen::VectorXd linear_index_start(const IndexProblem& problem, double tau_s, const QrOptions& qr = {}) {
  Eigen::MatrixXd design(problem.n(), problem.p() + 1);
  design.col(0).setOnes();
  design.rightCols(problem.p()) = problem.X();
  const QrSolution sol = fit_linear_quantile(design, problem.y(), tau_s, qr);
  Eigen::VectorXd slopes = sol.coefficients.tail(problem.p());
  if (!slopes.allFinite() || slopes.norm() == 0.0) {
    slopes = Eigen::VectorXd::Unit(problem.p(), 0);
  }
  return to_half_sphere(std::move(slopes));
}

inline SingleIndexFit fit_single_index(const IndexProblem& problem, double tau_s, int interior_knots,
                                       const SingleIndexOptions& options = {}) {
  require_level(tau_s, "tau_s");
  require(problem.p() >= 2, "fit_single_index: need at least two covariates for an index direction");
  const int order = options.order;
  const Eigen::Index needed = interior_knots + order + problem.p();
  if (problem.n() < needed) {
    throw UsageError("fit_single_index: " + std::to_string(problem.n()) + " positive observations, need at least " +
                     std::to_string(needed));
  }

  auto objective = [&](const Eigen::VectorXd& beta) {
    try {
      return profile_objective(problem, beta, tau_s, interior_knots, order, options.qr);
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  Eigen::VectorXd start = linear_index_start(problem, tau_s, options.qr);
  double start_value = objective(start);
  for (const auto& candidate : options.extra_starts) {
    const Eigen::VectorXd c = to_half_sphere(candidate);
    const double v = objective(c);
    if (v < start_value) {
      start = c;
      start_value = v;
    }
  }

  const SphereSearchResult found = minimize_on_sphere(objective, start, options.search);
  ThetaFit theta = fit_theta_given_beta(problem, found.beta, tau_s, interior_knots, order, options.qr);

  SingleIndexFit fit;
  fit.tau_s = tau_s;
  fit.beta = found.beta;
  fit.theta = std::move(theta.theta);
  fit.basis = std::move(theta.basis);
  fit.profile_objective = theta.objective;
  fit.n_positive = static_cast<int>(problem.n());
  fit.status = theta.status;
  fit.evaluations = found.evaluations;
  return fit;
}

/// floor(C n0^{1/(2m+1)}) + 1.
inline int default_knot_count(Eigen::Index n0, int order, double constant = 1.0) {
  require(n0 >= 1, "default_knot_count: need at least one observation");
  return static_cast<int>(std::floor(constant * std::pow(static_cast<double>(n0), 1.0 / (2.0 * order + 1.0)))) + 1;
}

/// Index of the first entry not larger than its neighbours.
inline std::size_t first_local_minimum(const std::vector<double>& values) {
  require(!values.empty(), "first_local_minimum: empty sequence");
  for (std::size_t i = 0; i < values.size(); ++i) {
    const bool left_ok = i == 0 || values[i] <= values[i - 1];
    const bool right_ok = i + 1 == values.size() || values[i] <= values[i + 1];
    if (left_ok && right_ok) return i;
  }
  return values.size() - 1;  // unreachable for finite input
}

struct KnotSelection {
  std::vector<int> candidate_Ns;
  std::vector<double> bic_values;
  int chosen_N = 1;
};

/// Scans N = 1 .. max_N with beta fixed and picks the first local minimum of
/// BIC(N) = log(L) + log(n0) / (2 n0) * (N + m). The default max_N is
/// 2 * N_default + 3.
inline KnotSelection select_knots(const IndexProblem& problem, double tau_s,
                                  const Eigen::Ref<const Eigen::VectorXd>& beta, int order,
                                  std::optional<int> max_N = std::nullopt, const QrOptions& qr = {}) {
  const Eigen::Index n0 = problem.n();
  const int upper = max_N.value_or(2 * default_knot_count(n0, order) + 3);
  require(upper >= 1, "select_knots: scan range is empty");
  const double n0d = static_cast<double>(n0);
  // log(0) is not a usable criterion; perfect fits sit at a scale-aware floor.
  const double floor = 1e-10 * (1.0 + problem.y().cwiseAbs().mean());

  KnotSelection out;
  for (int N = 1; N <= upper; ++N) {
    if (N + order >= n0) break;
    const double loss = profile_objective(problem, beta, tau_s, N, order, qr);
    out.candidate_Ns.push_back(N);
    out.bic_values.push_back(std::log(std::max(loss, floor)) + std::log(n0d) / (2.0 * n0d) * (N + order));
  }
  if (out.candidate_Ns.empty()) {
    throw UsageError("select_knots: too few observations for any interior knot");
  }
  out.chosen_N = out.candidate_Ns[first_local_minimum(out.bic_values)];
  return out;
}

}  // namespace ziqsi
