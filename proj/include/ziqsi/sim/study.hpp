#pragma once

// Monte Carlo harness: per replicate, draw a dataset, fit every configured
// method, predict curves at the subject profiles; then reduce to McReports.
// Replicate r draws data from stream (r, dataset) and QSI jitter from
// (r, jitter), so results do not depend on the worker count.

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <exception>
#include <string>
#include <vector>

#include "ziqsi/baselines.hpp"
#include "ziqsi/core/parallel.hpp"
#include "ziqsi/error.hpp"
#include "ziqsi/quantile_curve.hpp"
#include "ziqsi/sim/design.hpp"
#include "ziqsi/sim/metrics.hpp"
#include "ziqsi/sim/rng.hpp"

namespace ziqsi::sim {

struct SimConfig {
  int n = 500;
  int replicates = 50;
  std::uint64_t seed = 20240501;
  Design design;
  std::vector<double> tau_grid = default_grid();
  std::vector<Profile> profiles = default_profiles();
  std::vector<std::string> methods{"ziqsi", "ziq-linear", "qsi"};
  std::vector<double> extra_ziqsi_deltas;  // re-assembled from the same ZIQSI fits
  ZiqsiConfig fit;                         // fit.threads is ignored; replicates run in parallel
  int threads = 1;
  double max_failure_fraction = 0.1;
};

inline bool is_known_method(const std::string& m) { return m == "ziqsi" || m == "ziq-linear" || m == "qsi"; }

inline void validate(const SimConfig& c) {
  require(c.n >= 50, "simulation: n must be at least 50");
  require(c.replicates >= 1, "simulation: replicates must be at least 1");
  require(!c.profiles.empty(), "simulation: at least one profile is required");
  require(!c.methods.empty(), "simulation: at least one method is required");
  for (const auto& m : c.methods) require(is_known_method(m), "simulation: unknown method '" + m + "'");
  require(c.design.gamma_true.size() == kDesignCovariates + 1, "simulation: gamma_true must have 6 entries");
  for (const auto& p : c.profiles) {
    require(p.x.size() == kDesignCovariates, "simulation: profile '" + p.name + "' must have 5 covariates");
  }
  for (double d : c.extra_ziqsi_deltas) validate_delta(d);
  validate_delta(c.fit.delta);
  validate_grid(c.tau_grid);
  require(c.max_failure_fraction >= 0.0 && c.max_failure_fraction <= 1.0,
          "simulation: max_failure_fraction must lie in [0, 1]");
}

inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string delta_label(double delta) { return "ziqsi[delta=" + format_number(delta) + "]"; }

struct ReplicateFailure {
  int replicate = 0;
  std::string method;
  std::string message;
};

/// Predictions that fell in the estimated zero region, and how many of them
/// were exactly 0.
struct ZeroRegionCheck {
  std::string method;
  long long predictions = 0;
  long long exact_zeros = 0;
  long long oracle_zero_points = 0;  // of those, points also in the true zero region
};

struct StudyReport {
  SimConfig config;
  int successful_replicates = 0;
  double mean_zero_proportion = 0.0;  // observed share of y == 0 over successful replicates
  std::vector<McReport> reports;      // method-major, then profile
  std::vector<ZeroRegionCheck> zero_region;
  std::vector<ReplicateFailure> failures;
};

namespace detail {

struct CurveSet {
  std::vector<double> values;
  std::vector<Region> regions;
};

struct ReplicateOutput {
  bool ok = false;
  ReplicateFailure failure;
  double zero_proportion = 0.0;
  std::vector<std::vector<CurveSet>> curves;  // [method label][profile]
};

template <class Model>
std::vector<CurveSet> predict_profiles(const Model& model, const SimConfig& c) {
  std::vector<CurveSet> out;
  out.reserve(c.profiles.size());
  for (const auto& p : c.profiles) {
    CurveSet cs;
    for (const auto& pred : predict_curve(model, p.x, c.tau_grid)) {
      cs.values.push_back(pred.value);
      cs.regions.push_back(pred.region);
    }
    out.push_back(std::move(cs));
  }
  return out;
}

}  // namespace detail

/// Method labels in report order.
inline std::vector<std::string> method_labels(const SimConfig& c) {
  std::vector<std::string> labels;
  for (const auto& m : c.methods) {
    labels.push_back(m);
    if (m == "ziqsi") {
      for (double d : c.extra_ziqsi_deltas) labels.push_back(delta_label(d));
    }
  }
  return labels;
}

inline detail::ReplicateOutput run_replicate(const SimConfig& c, int r) {
  detail::ReplicateOutput out;
  const Dataset data = generate_dataset(c.design, c.n, c.seed, static_cast<std::uint64_t>(r));
  out.zero_proportion = static_cast<double>((data.y.array() == 0.0).count()) / static_cast<double>(c.n);
  ZiqsiConfig fit = c.fit;
  fit.threads = 1;
  std::string current;
  try {
    for (const auto& m : c.methods) {
      current = m;
      if (m == "ziqsi") {
        ZiqsiModel model = fit_ziqsi(data.X, data.y, fit);
        out.curves.push_back(detail::predict_profiles(model, c));
        for (double d : c.extra_ziqsi_deltas) {
          model.delta = d;
          out.curves.push_back(detail::predict_profiles(model, c));
        }
      } else if (m == "ziq-linear") {
        out.curves.push_back(detail::predict_profiles(fit_ziq_linear(data.X, data.y, fit), c));
      } else {
        CounterRng rng(c.seed, stream_id(static_cast<std::uint64_t>(r), Purpose::jitter));
        out.curves.push_back(detail::predict_profiles(fit_qsi(data.X, data.y, fit, rng), c));
      }
    }
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.failure = {r, current, e.what()};
    out.curves.clear();
  }
  return out;
}

inline StudyReport run_study(const SimConfig& c) {
  validate(c);
  std::vector<detail::ReplicateOutput> outputs(static_cast<std::size_t>(c.replicates));
  parallel_for(outputs.size(), c.threads,
               [&](std::size_t r) { outputs[r] = run_replicate(c, static_cast<int>(r)); });

  StudyReport report;
  report.config = c;
  for (const auto& o : outputs) {
    if (o.ok) {
      ++report.successful_replicates;
      report.mean_zero_proportion += o.zero_proportion;
    } else {
      report.failures.push_back(o.failure);
    }
  }
  if (static_cast<double>(report.failures.size()) > c.max_failure_fraction * c.replicates) {
    std::string msg = "simulation: " + std::to_string(report.failures.size()) + " of " +
                      std::to_string(c.replicates) + " replicates failed";
    if (!report.failures.empty()) msg += "; first failure (" + report.failures.front().method + "): " +
                                         report.failures.front().message;
    throw NumericalError(msg);
  }
  if (report.successful_replicates < 2) {
    throw NumericalError("simulation: fewer than two successful replicates; cannot aggregate");
  }
  report.mean_zero_proportion /= report.successful_replicates;

  const TrueQuantileOracle oracle(c.design.gamma_true);
  const std::vector<std::string> labels = method_labels(c);
  for (std::size_t m = 0; m < labels.size(); ++m) {
    ZeroRegionCheck check{labels[m], 0, 0, 0};
    for (std::size_t p = 0; p < c.profiles.size(); ++p) {
      const Profile& profile = c.profiles[p];
      std::vector<double> truth(c.tau_grid.size());
      for (std::size_t t = 0; t < truth.size(); ++t) truth[t] = oracle.quantile(profile.x, c.tau_grid[t]);
      const double true_change = 1.0 - oracle.positive_probability(profile.x);

      std::vector<std::vector<double>> curves;
      for (const auto& o : outputs) {
        if (!o.ok) continue;
        const detail::CurveSet& cs = o.curves[m][p];
        curves.push_back(cs.values);
        for (std::size_t t = 0; t < cs.values.size(); ++t) {
          if (cs.regions[t] != Region::zero) continue;
          ++check.predictions;
          check.exact_zeros += cs.values[t] == 0.0 ? 1 : 0;
          check.oracle_zero_points += c.tau_grid[t] <= true_change ? 1 : 0;
        }
      }
      McReport rep = evaluate_metrics(curves, truth, c.tau_grid);
      rep.method = labels[m];
      rep.profile = profile.name;
      report.reports.push_back(std::move(rep));
    }
    report.zero_region.push_back(check);
  }
  return report;
}

inline const McReport& find_report(const StudyReport& s, const std::string& method, const std::string& profile) {
  for (const auto& r : s.reports) {
    if (r.method == method && r.profile == profile) return r;
  }
  throw UsageError("no report for method '" + method + "' and profile '" + profile + "'");
}

}  // namespace ziqsi::sim
