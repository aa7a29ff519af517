#pragma once

// Generative design for zero-inflated, overdispersed counts:
//
//   x1 ~ Bernoulli(0.5), x2 ~ N(28, 2^2), x3 ~ N(92.5, 13^2),
//   x4 ~ N(80, 12^2),    x5 ~ N(124, 18.5^2),
//   D ~ Bernoulli(pi(x)),  logit pi(x) = gamma_0 + x' gamma,
//   Y = 0 if D = 0, else G_t(beta_0(t) + x' beta(t)) with t ~ Unif(0, 1),
//
// so Q(tau_s | x, Y > 0) = G_{tau_s}(beta_0(tau_s) + x' beta(tau_s)).

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "ziqsi/dataset.hpp"
#include "ziqsi/error.hpp"
#include "ziqsi/sim/rng.hpp"
#include "ziqsi/zero_model.hpp"

namespace ziqsi::sim {

inline constexpr int kDesignCovariates = 5;

struct CovariateLaw {
  double binary_probability = 0.5;
  std::array<double, 4> means{28.0, 92.5, 80.0, 124.0};
  std::array<double, 4> sds{2.0, 13.0, 12.0, 18.5};
};

inline Eigen::VectorXd default_gamma_true() {
  Eigen::VectorXd g(6);
  g << -0.4, -0.480, -0.022, 0.021, 0.015, -0.009;
  return g;
}

struct Design {
  Eigen::VectorXd gamma_true = default_gamma_true();  // intercept first
  CovariateLaw law;
};

/// beta_0(t) = -147.7 t - 50 t^2 - 20.
inline double true_intercept(double t) { return -147.7 * t - 50.0 * t * t - 20.0; }

inline Eigen::VectorXd true_slopes(double t) {
  Eigen::VectorXd b(kDesignCovariates);
  b[0] = 0.6 * std::sqrt(t) - 2.0 * t;
  b[1] = 2.2 * t * t;
  b[2] = (2.0 / 3.0) * t * t - (1.0 / 3.0) * t + 0.4;
  b[3] = -0.1 * std::sin(2.0 * std::numbers::pi * t);
  b[4] = -0.6 * t * t + 2.0 * t;
  return b;
}

/// G_t(u) = t u^4 1e-5 / 6 + t u^2 / 15.
inline double true_link(double t, double u) {
  const double u2 = u * u;
  return t * u2 * u2 * 1e-5 / 6.0 + t * u2 / 15.0;
}

/// Closed-form conditional quantiles of the design.
class TrueQuantileOracle {
 public:
  explicit TrueQuantileOracle(Eigen::VectorXd gamma = default_gamma_true()) : zero_{std::move(gamma), true, 0} {
    require(zero_.gamma.size() == kDesignCovariates + 1, "oracle: gamma must have 6 entries");
  }

  double positive_probability(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return ziqsi::positive_probability(zero_, x);
  }

  /// Q(tau_s | x, Y > 0).
  double positive_quantile(const Eigen::Ref<const Eigen::VectorXd>& x, double tau_s) const {
    return true_link(tau_s, true_intercept(tau_s) + x.dot(true_slopes(tau_s)));
  }

  /// Q(tau | x): 0 when tau <= 1 - pi(x).
  double quantile(const Eigen::Ref<const Eigen::VectorXd>& x, double tau) const {
    require_level(tau);
    const double pi = positive_probability(x);
    if (tau <= 1.0 - pi) return 0.0;
    return positive_quantile(x, gamma_map(tau, pi));
  }

  const ZeroModel& zero_model() const noexcept { return zero_; }

 private:
  ZeroModel zero_;
};

inline double true_quantile(const TrueQuantileOracle& oracle, const Eigen::Ref<const Eigen::VectorXd>& x, double tau) {
  return oracle.quantile(x, tau);
}

inline std::vector<std::string> design_covariate_names() { return {"x1", "x2", "x3", "x4", "x5"}; }

/// Draws n rows. Per row the draw order is x1..x5, t, D.
inline Dataset generate_dataset(const Design& design, Eigen::Index n, CounterRng& rng) {
  require(n >= 1, "generate_dataset: n must be positive");
  const TrueQuantileOracle oracle(design.gamma_true);
  Dataset data;
  data.covariate_names = design_covariate_names();
  data.X.resize(n, kDesignCovariates);
  data.y.resize(n);
  Eigen::VectorXd x(kDesignCovariates);
  for (Eigen::Index i = 0; i < n; ++i) {
    x[0] = rng.bernoulli(design.law.binary_probability) ? 1.0 : 0.0;
    for (int j = 0; j < 4; ++j) x[j + 1] = rng.normal(design.law.means[j], design.law.sds[j]);
    const double t = rng.uniform();
    const bool positive = rng.bernoulli(oracle.positive_probability(x));
    data.X.row(i) = x.transpose();
    data.y[i] = positive ? oracle.positive_quantile(x, t) : 0.0;
  }
  return data;
}

inline Dataset generate_dataset(const Design& design, Eigen::Index n, std::uint64_t seed, std::uint64_t replicate = 0) {
  CounterRng rng(seed, stream_id(replicate, Purpose::dataset));
  return generate_dataset(design, n, rng);
}

struct Profile {
  std::string name;
  Eigen::VectorXd x;
};

/// Four covariate profiles built from the 0.25 / 0.75 quantiles of each
/// covariate law, crossing low/high P(Y > 0) with low/high index value.
inline std::vector<Profile> default_profiles(const CovariateLaw& law = {}) {
  constexpr double z75 = 0.6744897501960817;  // standard normal 0.75 quantile
  auto q25 = [&](int j) { return law.means[j] - z75 * law.sds[j]; };
  auto q75 = [&](int j) { return law.means[j] + z75 * law.sds[j]; };
  auto make = [](std::string name, double x1, double x2, double x3, double x4, double x5) {
    Eigen::VectorXd x(kDesignCovariates);
    x << x1, x2, x3, x4, x5;
    return Profile{std::move(name), std::move(x)};
  };
  return {
      make("low-pi-high-index", 1.0, q75(0), q25(1), q25(2), q75(3)),
      make("low-pi-low-index", 1.0, q75(0), q25(1), q25(2), q25(3)),
      make("high-pi-high-index", 0.0, q25(0), q75(1), q75(2), q75(3)),
      make("high-pi-low-index", 0.0, q25(0), q75(1), q75(2), q25(3)),
  };
}

}  // namespace ziqsi::sim
