#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ziqsi/error.hpp"

namespace ziqsi {

/// Normalized B-spline basis of order m (degree m - 1) on [a, b] with N
/// equally spaced interior knots and m-fold boundary knots. J_n = N + m.
class SplineBasis {
 public:
  static constexpr int kMaxOrder = 16;

  SplineBasis() : SplineBasis(0.0, 1.0, 0, 1) {}

  SplineBasis(double a, double b, int interior_knots, int order)
      : a_(a), b_(b), interior_(interior_knots), order_(order) {
    require(std::isfinite(a) && std::isfinite(b), "SplineBasis: boundary must be finite");
    require(a < b, "SplineBasis: need a < b");
    require(interior_knots >= 0, "SplineBasis: interior knot count must be non-negative");
    require(order >= 1 && order <= kMaxOrder, "SplineBasis: order must lie in [1, 16]");
    knots_.reserve(static_cast<std::size_t>(interior_knots + 2 * order));
    knots_.insert(knots_.end(), static_cast<std::size_t>(order), a);
    const double width = b - a;
    for (int j = 1; j <= interior_knots; ++j) {
      knots_.push_back(a + width * static_cast<double>(j) / static_cast<double>(interior_knots + 1));
    }
    knots_.insert(knots_.end(), static_cast<std::size_t>(order), b);
  }

  double lower() const noexcept { return a_; }
  double upper() const noexcept { return b_; }
  int order() const noexcept { return order_; }
  int interior_knot_count() const noexcept { return interior_; }
  int size() const noexcept { return interior_ + order_; }
  const std::vector<double>& knots() const noexcept { return knots_; }
  std::span<const double> interior_knots() const noexcept {
    return {knots_.data() + order_, static_cast<std::size_t>(interior_)};
  }

  /// Writes the m possibly-nonzero basis values at u into `values` and returns
  /// the index of the first of them. u is clamped to [a, b]; u = b belongs to
  /// the last span.
  int evaluate_local(double u, std::span<double> values) const {
    if (!std::isfinite(u)) throw UsageError("SplineBasis: evaluation point must be finite");
    u = std::clamp(u, a_, b_);
    const int span = find_span(u);
    const int degree = order_ - 1;
    std::array<double, kMaxOrder> left{}, right{};
    values[0] = 1.0;
    for (int j = 1; j <= degree; ++j) {
      left[j] = u - knots_[span + 1 - j];
      right[j] = knots_[span + j] - u;
      double saved = 0.0;
      for (int r = 0; r < j; ++r) {
        const double temp = values[r] / (right[r + 1] + left[j - r]);
        values[r] = saved + right[r + 1] * temp;
        saved = left[j - r] * temp;
      }
      values[j] = saved;
    }
    return span - degree;
  }

  Eigen::VectorXd operator()(double u) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(size());
    std::array<double, kMaxOrder> local{};
    const int first = evaluate_local(u, local);
    for (int r = 0; r < order_; ++r) out[first + r] = local[r];
    return out;
  }

  /// Dense n x J_n design matrix for the points u.
  Eigen::MatrixXd design(const Eigen::Ref<const Eigen::VectorXd>& u) const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(u.size(), size());
    std::array<double, kMaxOrder> local{};
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const int first = evaluate_local(u[i], local);
      for (int r = 0; r < order_; ++r) out(i, first + r) = local[r];
    }
    return out;
  }

  /// Spline value sum_j theta_j B_j(u).
  double value(double u, const Eigen::Ref<const Eigen::VectorXd>& theta) const {
    std::array<double, kMaxOrder> local{};
    const int first = evaluate_local(u, local);
    double total = 0.0;
    for (int r = 0; r < order_; ++r) total += theta[first + r] * local[r];
    return total;
  }

 private:
  // Index s of the knot span with knots_[s] <= u < knots_[s + 1], restricted
  // to s in [m - 1, N + m - 1].
  int find_span(double u) const {
    const int lo = order_ - 1;
    const int hi = interior_ + order_ - 1;
    if (u >= knots_[hi]) return hi;
    const auto it = std::upper_bound(knots_.begin() + lo, knots_.begin() + hi + 1, u);
    return static_cast<int>(it - knots_.begin()) - 1;
  }

  double a_;
  double b_;
  int interior_;
  int order_;
  std::vector<double> knots_;
};

inline SplineBasis build_basis(double a, double b, int interior_knots, int order) {
  return SplineBasis(a, b, interior_knots, order);
}

}  // namespace ziqsi
