// Draws one dataset from the simulation design, fits ZIQSI, and prints the
// estimated and true conditional quantile curves at one profile.

#include <cstdio>

#include "ziqsi/ziqsi.hpp"

int main() {
  using namespace ziqsi;
  const sim::Design design;
  const Dataset data = sim::generate_dataset(design, 500, /*seed=*/7);

  ZiqsiConfig config;
  config.threads = default_thread_count();
  const ZiqsiModel model = fit_ziqsi(data.X, data.y, config);
  std::printf("zero share %.3f, interior knots %d\n", (data.y.array() == 0.0).cast<double>().mean(),
              model.interior_knots);

  const sim::TrueQuantileOracle oracle(design.gamma_true);
  const sim::Profile profile = sim::default_profiles().front();
  std::printf("%6s %12s %12s %14s\n", "tau", "estimate", "truth", "region");
  for (double tau = 0.05; tau < 1.0; tau += 0.05) {
    const QuantilePrediction p = predict_quantile(model, profile.x, tau);
    std::printf("%6.2f %12.4f %12.4f %14s\n", tau, p.value, oracle.quantile(profile.x, tau), to_string(p.region));
  }
}
