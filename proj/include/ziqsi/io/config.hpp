#pragma once

// JSON configuration files. Every key is optional and unknown keys are
// rejected. Defaults are listed next to each field.
//
// Run config (fit command):
//   delta           0.499      width exponent of the interpolation band
//   order           4          spline order m (4 = cubic)
//   grid            0.01..0.99 array of levels, or {"first", "last", "step"}
//   interior_knots  null       fixed N; null selects N by BIC
//   seed            1          jitter seed for method qsi
//   threads         $ZIQSI_THREADS or 1
//   method          "ziqsi"    "ziqsi" | "ziq-linear" | "qsi"
//   search          {"initial_step": 0.1, "f_tolerance": 1e-6, "x_tolerance": none,
//                    "max_evaluations": 3000, "restarts": 3}
//   solver          {"gap_tolerance": 1e-8, "max_iterations": 100}
//
// Simulation config (simulate / benchmark commands): every run-config key
// above except "method" and "seed" may appear under "fit", plus
//   n                     500
//   replicates            50
//   seed                  20240501
//   threads               $ZIQSI_THREADS or 1
//   methods               ["ziqsi", "ziq-linear", "qsi"]
//   extra_ziqsi_deltas    []      extra deltas re-assembled from the ZIQSI fits
//   max_failure_fraction  0.1
//   gamma_true            [-0.4, -0.480, -0.022, 0.021, 0.015, -0.009]
//   covariate_law         {"binary_probability": 0.5, "means": [28, 92.5, 80, 124],
//                          "sds": [2, 13, 12, 18.5]}
//   tau_grid              0.01..0.99 (same forms as grid)
//   profiles              [{"name": str, "x": [5 numbers]}]; default: four
//                         quartile-based profiles

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "ziqsi/core/parallel.hpp"
#include "ziqsi/error.hpp"
#include "ziqsi/quantile_curve.hpp"
#include "ziqsi/sim/study.hpp"

namespace ziqsi::io {

struct RunConfig {
  ZiqsiConfig fit;
  std::uint64_t seed = 1;
  std::string method = "ziqsi";
};

namespace detail {

using cjson = nlohmann::json;

inline void check_keys(const cjson& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw UsageError("config: '" + where + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw UsageError("config: unknown key '" + key + "' in " + where);
  }
}

inline std::vector<double> grid_from(const cjson& g) {
  std::vector<double> levels;
  if (g.is_array()) {
    levels = g.get<std::vector<double>>();
  } else {
    check_keys(g, {"first", "last", "step"}, "grid");
    const double first = g.value("first", 0.01);
    const double last = g.value("last", 0.99);
    const double step = g.value("step", 0.01);
    require(step > 0.0 && last >= first, "config: grid needs step > 0 and last >= first");
    const auto count = static_cast<long>(std::floor((last - first) / step + 1e-9)) + 1;
    for (long k = 0; k < count; ++k) levels.push_back(first + static_cast<double>(k) * step);
  }
  validate_grid(levels);
  return levels;
}

inline void apply_fit_keys(const cjson& j, ZiqsiConfig& fit) {
  if (j.contains("delta")) fit.delta = j.at("delta").get<double>();
  if (j.contains("order")) fit.order = j.at("order").get<int>();
  if (j.contains("grid")) fit.grid = grid_from(j.at("grid"));
  if (j.contains("interior_knots") && !j.at("interior_knots").is_null()) {
    fit.interior_knots = j.at("interior_knots").get<int>();
    require(*fit.interior_knots >= 0, "config: interior_knots must be non-negative");
  }
  if (j.contains("threads")) fit.threads = j.at("threads").get<int>();
  if (j.contains("search")) {
    const cjson& s = j.at("search");
    check_keys(s, {"initial_step", "f_tolerance", "x_tolerance", "max_evaluations", "restarts"}, "search");
    fit.search.initial_step = s.value("initial_step", fit.search.initial_step);
    fit.search.f_tolerance = s.value("f_tolerance", fit.search.f_tolerance);
    fit.search.x_tolerance = s.value("x_tolerance", fit.search.x_tolerance);
    fit.search.max_evaluations = s.value("max_evaluations", fit.search.max_evaluations);
    fit.search.restarts = s.value("restarts", fit.search.restarts);
  }
  if (j.contains("solver")) {
    const cjson& s = j.at("solver");
    check_keys(s, {"gap_tolerance", "max_iterations"}, "solver");
    fit.qr.gap_tolerance = s.value("gap_tolerance", fit.qr.gap_tolerance);
    fit.qr.max_iterations = s.value("max_iterations", fit.qr.max_iterations);
  }
  validate_delta(fit.delta);
  require(fit.order >= 2, "config: order must be at least 2");
  require(fit.threads >= 1, "config: threads must be at least 1");
}

inline cjson parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  try {
    return cjson::parse(in);
  } catch (const cjson::exception& e) {
    throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace detail

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  detail::check_keys(j,
                     {"delta", "order", "grid", "interior_knots", "seed", "threads", "method", "search", "solver"},
                     "run config");
  RunConfig c;
  c.fit.threads = default_thread_count();
  try {
    detail::apply_fit_keys(j, c.fit);
    c.seed = j.value("seed", c.seed);
    c.method = j.value("method", c.method);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  require(sim::is_known_method(c.method), "config: unknown method '" + c.method + "'");
  return c;
}

inline RunConfig load_run_config(const std::string& path) { return run_config_from_json(detail::parse_file(path)); }

inline sim::SimConfig sim_config_from_json(const nlohmann::json& j) {
  detail::check_keys(j,
                     {"n", "replicates", "seed", "threads", "methods", "extra_ziqsi_deltas", "max_failure_fraction",
                      "gamma_true", "covariate_law", "tau_grid", "profiles", "fit"},
                     "simulation config");
  sim::SimConfig c;
  c.threads = default_thread_count();
  try {
    c.n = j.value("n", c.n);
    c.replicates = j.value("replicates", c.replicates);
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    if (j.contains("methods")) c.methods = j.at("methods").get<std::vector<std::string>>();
    if (j.contains("extra_ziqsi_deltas")) c.extra_ziqsi_deltas = j.at("extra_ziqsi_deltas").get<std::vector<double>>();
    c.max_failure_fraction = j.value("max_failure_fraction", c.max_failure_fraction);
    if (j.contains("gamma_true")) {
      const auto g = j.at("gamma_true").get<std::vector<double>>();
      c.design.gamma_true = Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
    }
    if (j.contains("covariate_law")) {
      const auto& law = j.at("covariate_law");
      detail::check_keys(law, {"binary_probability", "means", "sds"}, "covariate_law");
      c.design.law.binary_probability = law.value("binary_probability", c.design.law.binary_probability);
      if (law.contains("means")) c.design.law.means = law.at("means").get<std::array<double, 4>>();
      if (law.contains("sds")) c.design.law.sds = law.at("sds").get<std::array<double, 4>>();
    }
    if (j.contains("tau_grid")) c.tau_grid = detail::grid_from(j.at("tau_grid"));
    if (j.contains("profiles")) {
      c.profiles.clear();
      for (const auto& p : j.at("profiles")) {
        detail::check_keys(p, {"name", "x"}, "profile");
        const auto x = p.at("x").get<std::vector<double>>();
        c.profiles.push_back(
            {p.at("name").get<std::string>(), Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()))});
      }
    } else {
      c.profiles = sim::default_profiles(c.design.law);
    }
    if (j.contains("fit")) {
      detail::check_keys(j.at("fit"), {"delta", "order", "grid", "interior_knots", "search", "solver"}, "fit");
      detail::apply_fit_keys(j.at("fit"), c.fit);
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  require(c.threads >= 1, "config: threads must be at least 1");
  sim::validate(c);
  return c;
}

inline sim::SimConfig load_sim_config(const std::string& path) {
  return sim_config_from_json(detail::parse_file(path));
}

}  // namespace ziqsi::io
