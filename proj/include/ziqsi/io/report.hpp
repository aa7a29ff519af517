#pragma once

// Study report emission: a JSON document, a flat metrics CSV
// (method, profile, metric, value) and a per-tau band CSV for plotting.

#include <nlohmann/json.hpp>

#include <ostream>
#include <string>

#include "ziqsi/io/csv.hpp"
#include "ziqsi/sim/study.hpp"

namespace ziqsi::io {

inline nlohmann::ordered_json study_to_json(const sim::StudyReport& s) {
  using oj = nlohmann::ordered_json;
  const sim::SimConfig& c = s.config;
  oj profiles = oj::array();
  for (const auto& p : c.profiles) {
    profiles.push_back({{"name", p.name}, {"x", std::vector<double>(p.x.data(), p.x.data() + p.x.size())}});
  }
  oj j;
  j["config"] = {{"n", c.n},
                 {"replicates", c.replicates},
                 {"seed", c.seed},
                 {"methods", c.methods},
                 {"extra_ziqsi_deltas", c.extra_ziqsi_deltas},
                 {"delta", c.fit.delta},
                 {"order", c.fit.order},
                 {"gamma_true", std::vector<double>(c.design.gamma_true.data(),
                                                    c.design.gamma_true.data() + c.design.gamma_true.size())},
                 {"profiles", profiles}};
  j["successful_replicates"] = s.successful_replicates;
  j["mean_zero_proportion"] = s.mean_zero_proportion;
  oj reports = oj::array();
  for (const auto& r : s.reports) {
    reports.push_back({{"method", r.method},
                       {"profile", r.profile},
                       {"replicates", r.replicates},
                       {"ribias", r.ribias},
                       {"rivar", r.rivar},
                       {"rimse", r.rimse},
                       {"negative_fraction", r.negative_fraction},
                       {"tau", r.taus},
                       {"oracle", r.oracle},
                       {"mean", r.mean_curve},
                       {"lower", r.lower_band},
                       {"upper", r.upper_band}});
  }
  j["reports"] = std::move(reports);
  oj zero = oj::array();
  for (const auto& z : s.zero_region) {
    zero.push_back({{"method", z.method},
                    {"predictions", z.predictions},
                    {"exact_zeros", z.exact_zeros},
                    {"oracle_zero_points", z.oracle_zero_points}});
  }
  j["zero_region"] = std::move(zero);
  oj failures = oj::array();
  for (const auto& f : s.failures) {
    failures.push_back({{"replicate", f.replicate}, {"method", f.method}, {"message", f.message}});
  }
  j["failures"] = std::move(failures);
  return j;
}

inline void write_metrics_csv(std::ostream& out, const sim::StudyReport& s) {
  CsvWriter w(out);
  w.row("method", "profile", "metric", "value");
  for (const auto& r : s.reports) {
    w.row(r.method, r.profile, "RIBIAS", r.ribias);
    w.row(r.method, r.profile, "RIVAR", r.rivar);
    w.row(r.method, r.profile, "RIMSE", r.rimse);
    w.row(r.method, r.profile, "negative_fraction", r.negative_fraction);
  }
}

inline void write_band_csv(std::ostream& out, const sim::StudyReport& s) {
  CsvWriter w(out);
  w.row("method", "profile", "tau", "oracle", "mean", "lower", "upper");
  for (const auto& r : s.reports) {
    for (std::size_t t = 0; t < r.taus.size(); ++t) {
      w.row(r.method, r.profile, r.taus[t], r.oracle[t], r.mean_curve[t], r.lower_band[t], r.upper_band[t]);
    }
  }
}

}  // namespace ziqsi::io
