#pragma once

// Linear quantile regression by the Frisch-Newton primal-dual interior-point
// method on the bounded-variable dual LP
//
//   max  y'd   s.t.  X'd = (1 - tau) X'1,  0 <= d <= 1,
//
// with Mehrotra predictor-corrector steps. Coefficients are recovered from the
// equality-constraint multipliers.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ziqsi/core/check_loss.hpp"
#include "ziqsi/error.hpp"

namespace ziqsi {

enum class QrStatus { converged, max_iter, degenerate };

inline const char* to_string(QrStatus s) {
  switch (s) {
    case QrStatus::converged: return "converged";
    case QrStatus::max_iter: return "max_iter";
    case QrStatus::degenerate: return "degenerate";
  }
  return "unknown";
}

struct QrOptions {
  double gap_tolerance = 1e-8;  // relative to max(1, |dual objective|)
  int max_iterations = 100;
  double ridge = 1e-9;          // added to X'DX when the design is rank deficient
  double step_fraction = 0.99995;
};

struct QrSolution {
  Eigen::VectorXd coefficients;
  double objective = 0.0;  // mean check loss at coefficients
  QrStatus status = QrStatus::converged;
  int iterations = 0;
};

namespace detail {

inline Eigen::Index numerical_rank(const Eigen::Ref<const Eigen::MatrixXd>& design) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  return qr.rank();
}

// Largest step in (0, 1] keeping v + step * dv > 0, scaled back by `fraction`.
inline double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv, double fraction) {
  const double step = (dv.array() < 0.0)
                          .select(-v.array() / dv.array(), std::numeric_limits<double>::infinity())
                          .minCoeff();
  return std::min(fraction * step, 1.0);
}

}  // namespace detail

/// Minimizes (1/n) sum_i rho_tau(y_i - z_i' theta) over theta.
inline QrSolution fit_linear_quantile(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                      const Eigen::Ref<const Eigen::VectorXd>& response, double tau,
                                      const QrOptions& options = {}) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;

  const Eigen::Index n = design.rows();
  const Eigen::Index k = design.cols();
  require(response.size() == n, "fit_linear_quantile: design has " + std::to_string(n) +
                                    " rows but response has " + std::to_string(response.size()));
  require(k >= 1, "fit_linear_quantile: design needs at least one column");
  require(n >= k, "fit_linear_quantile: need at least as many rows as columns");
  require_level(tau);
  if (!design.allFinite() || !response.allFinite()) {
    throw NumericalError("fit_linear_quantile: non-finite input");
  }

  const bool rank_deficient = detail::numerical_rank(design) < k;
  const double ridge = rank_deficient ? options.ridge : 0.0;
  const double beta = options.step_fraction;
  const double eps = 1e-6;  // interior perturbation of the starting point

  // Dual LP data: a = X', c = -y, b = (1 - tau) X'1, upper bound 1.
  const VectorXd c = -response;
  const VectorXd b = (1.0 - tau) * design.colwise().sum().transpose();

  VectorXd x = VectorXd::Constant(n, 1.0 - tau);
  VectorXd s = VectorXd::Constant(n, tau);
  VectorXd d = VectorXd::Ones(n);

  MatrixXd ada(k, k);
  MatrixXd weighted(n, k);
  Eigen::LLT<MatrixXd> llt;
  auto factor = [&](const VectorXd& weights) {
    weighted.noalias() = weights.asDiagonal() * design;
    ada.noalias() = design.transpose().lazyProduct(weighted);
    if (ridge > 0.0) ada.diagonal().array() += ridge;
    llt.compute(ada);
    if (llt.info() != Eigen::Success) {
      ada.diagonal().array() += options.ridge * std::max(1.0, ada.diagonal().maxCoeff());
      llt.compute(ada);
      if (llt.info() != Eigen::Success) {
        throw NumericalError("fit_linear_quantile: normal equations are not positive definite");
      }
    }
  };

  // Least-squares start for the dual multipliers.
  factor(d);
  VectorXd y = llt.solve(design.transpose() * c);
  VectorXd r = c - design * y;
  VectorXd z(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    z[i] = std::max(r[i], 0.0);
    w[i] = std::max(-r[i], 0.0);
    if (std::abs(r[i]) < eps) {
      z[i] += eps;
      w[i] += eps;
    }
  }

  double gap = z.dot(x) + w.dot(s);
  auto converged = [&] {
    return gap <= options.gap_tolerance * std::max(1.0, std::abs(c.dot(x)));
  };

  VectorXd dx(n), ds(n), dz(n), dw(n), dr(n), u(n), rhs(k), dy(k);
  int iter = 0;
  while (!converged() && iter < options.max_iterations) {
    ++iter;
    d = ((z.array() / x.array()) + (w.array() / s.array())).inverse().matrix();
    ds = z - w;
    dz = d.cwiseProduct(ds);
    dy = b - design.transpose() * x + design.transpose() * dz;
    rhs = dy;
    factor(d);
    dy = llt.solve(dy);

    ds = design * dy - ds;
    dx = d.cwiseProduct(ds);
    ds = -dx;
    dz = -(z.array() * (dx.array() / x.array() + 1.0)).matrix();
    dw = -(w.array() * (ds.array() / s.array() + 1.0)).matrix();

    double deltap = std::min(detail::max_step(x, dx, beta), detail::max_step(s, ds, beta));
    double deltad = std::min(detail::max_step(z, dz, beta), detail::max_step(w, dw, beta));

    if (std::min(deltap, deltad) < 1.0) {
      // Mehrotra corrector.
      double mu = z.dot(x) + w.dot(s);
      const double g = (z + deltad * dz).dot(x + deltap * dx) + (w + deltad * dw).dot(s + deltap * ds);
      mu = mu * std::pow(g / mu, 3) / (2.0 * static_cast<double>(n));
      dr = (d.array() * (mu * (s.array().inverse() - x.array().inverse()) +
                         dx.array() * dz.array() / x.array() - ds.array() * dw.array() / s.array()))
               .matrix();
      dy = llt.solve(rhs + design.transpose() * dr);
      u.noalias() = design * dy;
      const VectorXd dxdz = dx.cwiseProduct(dz);
      const VectorXd dsdw = ds.cwiseProduct(dw);
      dx = d.cwiseProduct(u - z + w) - dr;
      ds = -dx;
      dz = (-z.array() + (mu - z.array() * dx.array() - dxdz.array()) / x.array()).matrix();
      dw = (-w.array() + (mu - w.array() * ds.array() - dsdw.array()) / s.array()).matrix();
      deltap = std::min(detail::max_step(x, dx, beta), detail::max_step(s, ds, beta));
      deltad = std::min(detail::max_step(z, dz, beta), detail::max_step(w, dw, beta));
    }

    x += deltap * dx;
    s += deltap * ds;
    y += deltad * dy;
    z += deltad * dz;
    w += deltad * dw;
    gap = z.dot(x) + w.dot(s);
    if (!std::isfinite(gap)) throw NumericalError("fit_linear_quantile: iteration diverged");
  }

  QrSolution out;
  out.coefficients = -y;
  out.iterations = iter;
  out.objective = mean_check_loss(response - design * out.coefficients, tau);
  if (rank_deficient) {
    out.status = QrStatus::degenerate;
  } else if (!converged()) {
    out.status = QrStatus::max_iter;
  }
  return out;
}

}  // namespace ziqsi
