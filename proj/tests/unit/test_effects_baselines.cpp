#include <gtest/gtest.h>

#include <cmath>

#include "test_helpers.hpp"
#include "ziqsi/baselines.hpp"
#include "ziqsi/effects.hpp"
#include "ziqsi/quantile_curve.hpp"
#include "ziqsi/sim/design.hpp"

using namespace ziqsi;

namespace {

ZiqsiConfig small_grid_config() {
  ZiqsiConfig cfg;
  cfg.grid = {0.1, 0.3, 0.5, 0.7, 0.9};
  return cfg;
}

const Dataset& shared_data() {
  static const Dataset data = sim::generate_dataset(sim::Design{}, 300, 71);
  return data;
}

const ZiqsiModel& shared_ziqsi() {
  static const ZiqsiModel m = fit_ziqsi(shared_data().X, shared_data().y, small_grid_config());
  return m;
}

Dataset linear_positive_data(Eigen::Index n, std::uint64_t seed) {
  sim::CounterRng rng(seed, 0);
  Dataset d;
  d.X = test_support::normal_matrix(rng, n, 3);
  d.y.resize(n);
  const Eigen::Vector3d slope(0.5, -0.3, 0.8);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool positive = rng.bernoulli(logistic(0.5 + 0.7 * d.X(i, 0)));
    d.y[i] = positive ? 10.0 + d.X.row(i).dot(slope) + rng.normal() : 0.0;
  }
  return d;
}

}  // namespace

TEST(Aqe, EqualLevelsGiveExactZero) {
  const Dataset& d = shared_data();
  EXPECT_EQ(compute_aqe(shared_ziqsi(), d.X, 0, 1.0, 1.0, 0.7).estimate, 0.0);
}

TEST(Aqe, AntisymmetryAndAveraging) {
  const Dataset& d = shared_data();
  const ZiqsiModel& m = shared_ziqsi();
  const AqeResult uv = compute_aqe(m, d.X, 0, 1.0, 0.0, 0.7);
  const AqeResult vu = compute_aqe(m, d.X, 0, 0.0, 1.0, 0.7);
  EXPECT_EQ(uv.estimate, -vu.estimate);
  EXPECT_EQ(uv.n_averaged, d.n());
  EXPECT_TRUE(std::isfinite(uv.estimate));

  const Eigen::MatrixXd top = d.X.topRows(120), bottom = d.X.bottomRows(180);
  const double a = compute_aqe(m, top, 4, 140.0, 110.0, 0.8).estimate;
  const double b = compute_aqe(m, bottom, 4, 140.0, 110.0, 0.8).estimate;
  const double all = compute_aqe(m, d.X, 4, 140.0, 110.0, 0.8).estimate;
  EXPECT_NEAR(all, (120.0 * a + 180.0 * b) / 300.0, 1e-12 * (1.0 + std::abs(all)));
}

TEST(Aqe, ZeroRegionForEveryRowGivesZero) {
  ZiqsiModel m = shared_ziqsi();
  m.zero.gamma.setZero();
  m.zero.gamma[0] = -8.0;  // pi ~ 3e-4, so tau = 0.5 is in the zero region
  EXPECT_EQ(compute_aqe(m, shared_data().X, 0, 1.0, 0.0, 0.5).estimate, 0.0);
}

TEST(Aqe, TracksGenerativeEffect) {
  const Dataset& d = shared_data();
  const sim::TrueQuantileOracle oracle;
  double truth = 0.0;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    Eigen::VectorXd xu = d.X.row(i).transpose(), xv = xu;
    xu[0] = 1.0;
    xv[0] = 0.0;
    truth += oracle.quantile(xu, 0.7) - oracle.quantile(xv, 0.7);
  }
  truth /= static_cast<double>(d.n());
  const double est = compute_aqe(shared_ziqsi(), d.X, 0, 1.0, 0.0, 0.7).estimate;
  double scale = 0.0;
  for (Eigen::Index i = 0; i < d.n(); ++i) scale += std::abs(oracle.quantile(d.X.row(i).transpose(), 0.7));
  scale /= static_cast<double>(d.n());
  // Monte Carlo tolerance at the level of the typical conditional quantile.
  EXPECT_LT(std::abs(est - truth), 0.5 * scale) << "estimate " << est << " truth " << truth;
}

TEST(Aqe, BadArgumentsThrow) {
  const Dataset& d = shared_data();
  EXPECT_THROW(compute_aqe(shared_ziqsi(), d.X, 5, 1.0, 0.0, 0.5), UsageError);
  EXPECT_THROW(compute_aqe(shared_ziqsi(), d.X, -1, 1.0, 0.0, 0.5), UsageError);
  EXPECT_THROW(compute_aqe(shared_ziqsi(), d.X, 0, 1.0, 0.0, 1.5), UsageError);
}

TEST(Aqe, BootstrapIsDeterministicAndThreadIndependent) {
  const Dataset d = linear_positive_data(200, 72);
  auto fit = [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    ZiqsiConfig cfg;
    cfg.grid = {0.25, 0.5, 0.75};
    return fit_ziq_linear(X, y, cfg);
  };
  const AqeBootstrap a = bootstrap_aqe(d.X, d.y, fit, 1, 1.0, -1.0, 0.8, 20, 9, 1);
  const AqeBootstrap b = bootstrap_aqe(d.X, d.y, fit, 1, 1.0, -1.0, 0.8, 20, 9, 3);
  EXPECT_EQ(a.replicates, b.replicates);
  EXPECT_EQ(a.failures + static_cast<int>(a.replicates.size()), 20);
  EXPECT_GT(a.standard_error, 0.0);
  EXPECT_LE(a.lower, a.upper);
}

TEST(ZiqLinear, SharesZeroModelAndRegionsWithZiqsi) {
  const Dataset& d = shared_data();
  const ZiqLinearModel lin = fit_ziq_linear(d.X, d.y, small_grid_config());
  const ZiqsiModel& zs = shared_ziqsi();
  ASSERT_EQ(lin.zero.gamma.size(), zs.zero.gamma.size());
  for (Eigen::Index j = 0; j < lin.zero.gamma.size(); ++j) EXPECT_EQ(lin.zero.gamma[j], zs.zero.gamma[j]);
  sim::CounterRng rng(73, 0);
  for (int k = 0; k < 200; ++k) {
    const Eigen::VectorXd x = d.X.row(static_cast<Eigen::Index>(rng.below(300))).transpose();
    const double tau = 0.01 + 0.98 * rng.uniform();
    EXPECT_EQ(predict_quantile(lin, x, tau).region, predict_quantile(zs, x, tau).region);
    if (predict_quantile(lin, x, tau).region == Region::zero) EXPECT_EQ(predict_quantile(lin, x, tau).value, 0.0);
  }
}

TEST(ZiqLinear, PositivePartIsLinearQuantileRegression) {
  const Dataset d = linear_positive_data(400, 74);
  const ZiqLinearModel m = fit_ziq_linear(d.X, d.y, small_grid_config());
  for (std::size_t k = 0; k < m.grid_levels.size(); ++k) {
    ASSERT_EQ(m.coefficients[k].size(), 4);
    EXPECT_NEAR(m.coefficients[k][1], 0.5, 0.35);
    EXPECT_NEAR(m.coefficients[k][3], 0.8, 0.35);
  }
}

TEST(ZiqLinear, MatchesZiqsiWithLinearSplineOnLinearData) {
  const Dataset d = linear_positive_data(500, 75);
  ZiqsiConfig cfg = small_grid_config();
  cfg.order = 2;
  cfg.interior_knots = 0;
  const ZiqsiModel zs = fit_ziqsi(d.X, d.y, cfg);
  const ZiqLinearModel lin = fit_ziq_linear(d.X, d.y, cfg);
  for (Eigen::Index i = 0; i < 50; ++i) {
    const Eigen::VectorXd x = d.X.row(i).transpose();
    for (double tau : {0.6, 0.75, 0.9}) {
      const QuantilePrediction a = predict_quantile(zs, x, tau), b = predict_quantile(lin, x, tau);
      if (a.region != Region::positive) continue;
      EXPECT_NEAR(a.value, b.value, 1e-3 * std::abs(b.value)) << "row " << i << " tau " << tau;
    }
  }
}

TEST(Qsi, JitterHasRequestedScaleAndIsReproducible) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(20000);
  y[0] = 3.0;
  sim::CounterRng r1(5, sim::stream_id(0, sim::Purpose::jitter)), r2(5, sim::stream_id(0, sim::Purpose::jitter));
  const Eigen::VectorXd a = jitter_zeros(y, r1), b = jitter_zeros(y, r2);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a[0], 3.0);
  const double sd = std::sqrt(a.tail(19999).squaredNorm() / 19999.0);
  EXPECT_NEAR(sd, 1e-5, 2e-7);
}

TEST(Qsi, NoZeroRegionAndSeedReproducible) {
  const Dataset& d = shared_data();
  const QsiModel a = fit_qsi(d.X, d.y, small_grid_config(), 3);
  const QsiModel b = fit_qsi(d.X, d.y, small_grid_config(), 3);
  for (std::size_t k = 0; k < a.grid_fits.size(); ++k) {
    EXPECT_EQ(a.grid_fits[k].beta, b.grid_fits[k].beta);
    EXPECT_EQ(a.grid_fits[k].theta, b.grid_fits[k].theta);
  }
  for (Eigen::Index i = 0; i < 30; ++i) {
    for (double tau : {0.05, 0.3, 0.6, 0.95}) {
      const QuantilePrediction p = predict_quantile(a, d.X.row(i).transpose(), tau);
      EXPECT_EQ(p.region, Region::positive);
      EXPECT_EQ(p.tau_s_used, tau);
    }
  }
}

TEST(Qsi, AllPositiveDataMatchesZiqsiPositivePart) {
  // With no zeros QSI reduces to the ZIQSI positive part at tau_s = tau.
  Dataset d = linear_positive_data(300, 76);
  d.y = d.y.cwiseMax(0.0).array() + 20.0;
  ZiqsiConfig cfg = small_grid_config();
  cfg.interior_knots = 2;
  const QsiModel q = fit_qsi(d.X, d.y, cfg, 1);
  SingleIndexOptions opt;
  const IndexProblem problem = IndexProblem::positive_part(d.X, d.y);
  for (std::size_t k = 0; k < cfg.grid.size(); ++k) {
    const SingleIndexFit f = fit_single_index(problem, cfg.grid[k], 2, opt);
    for (Eigen::Index i = 0; i < 20; ++i) {
      const Eigen::VectorXd x = d.X.row(i).transpose();
      EXPECT_NEAR(predict_quantile(q, x, cfg.grid[k]).value, f.predict(x), 1e-9 * (1.0 + std::abs(f.predict(x))));
    }
  }
}
