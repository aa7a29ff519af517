#pragma once

// JSON model files. Doubles are written in shortest round-trip form, so a
// saved and reloaded model predicts bit-identically.
//
// {
//   "format": "ziqsi-model", "version": 1,
//   "kind": "ziqsi" | "ziq-linear" | "qsi",
//   "covariate_names": [...], "encoding": [{"name", "categorical", "levels"}],
//   "n_total": int, "delta": real, "order": int, "interior_knots": int,
//   "zero_model": {"gamma": [...], "status": str, "iterations": int},
//   "knot_selection": {"candidates": [...], "bic": [...], "chosen": int} | null,
//   "grid": [ per-level fit ]
// }
//
// A ziqsi / qsi level holds tau_s, beta, theta, index_lower, index_upper,
// profile_objective, n_positive, status and evaluations; a ziq-linear level
// holds tau_s, coefficients (intercept first) and status. "delta" and
// "zero_model" are absent for qsi; "order" and "interior_knots" are absent
// for ziq-linear.

#include <nlohmann/json.hpp>

#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "ziqsi/baselines.hpp"
#include "ziqsi/error.hpp"
#include "ziqsi/io/csv.hpp"
#include "ziqsi/quantile_curve.hpp"

namespace ziqsi::io {

using json = nlohmann::ordered_json;

using AnyModel = std::variant<ZiqsiModel, ZiqLinearModel, QsiModel>;

struct ModelFile {
  AnyModel model;
  Encoding encoding;
};

inline const char* model_kind(const AnyModel& m) {
  switch (m.index()) {
    case 0: return "ziqsi";
    case 1: return "ziq-linear";
    default: return "qsi";
  }
}

inline QuantilePrediction predict_quantile(const AnyModel& m, const Eigen::Ref<const Eigen::VectorXd>& x,
                                           double tau) {
  return std::visit([&](const auto& model) { return ziqsi::predict_quantile(model, x, tau); }, m);
}

inline const std::vector<std::string>& covariate_names(const AnyModel& m) {
  return std::visit([](const auto& model) -> const std::vector<std::string>& { return model.covariate_names; }, m);
}

inline Eigen::Index covariate_count(const AnyModel& m) {
  return std::visit([](const auto& model) { return model.covariate_count(); }, m);
}

namespace detail {

inline json to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Eigen::VectorXd vector_from(const json& a) {
  if (!a.is_array()) throw UsageError("model file: expected a numeric array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

inline QrStatus qr_status_from(const std::string& s) {
  if (s == "converged") return QrStatus::converged;
  if (s == "max_iter") return QrStatus::max_iter;
  if (s == "degenerate") return QrStatus::degenerate;
  throw UsageError("model file: unknown solver status '" + s + "'");
}

inline LogisticStatus logistic_status_from(const std::string& s) {
  if (s == "converged") return LogisticStatus::converged;
  if (s == "separated") return LogisticStatus::separated;
  if (s == "max_iter") return LogisticStatus::max_iter;
  throw UsageError("model file: unknown logistic status '" + s + "'");
}

inline json zero_to_json(const ZeroModel& z) {
  return json{{"gamma", to_json(z.gamma)}, {"status", to_string(z.status)}, {"iterations", z.iterations}};
}

inline ZeroModel zero_from(const json& j) {
  ZeroModel z;
  z.gamma = vector_from(j.at("gamma"));
  z.status = logistic_status_from(j.at("status").get<std::string>());
  z.converged = z.status == LogisticStatus::converged;
  z.iterations = j.at("iterations").get<int>();
  return z;
}

inline json index_fit_to_json(const SingleIndexFit& f) {
  return json{{"tau_s", f.tau_s},
              {"beta", to_json(f.beta)},
              {"theta", to_json(f.theta)},
              {"index_lower", f.basis.lower()},
              {"index_upper", f.basis.upper()},
              {"profile_objective", f.profile_objective},
              {"n_positive", f.n_positive},
              {"status", to_string(f.status)},
              {"evaluations", f.evaluations}};
}

inline SingleIndexFit index_fit_from(const json& j, int interior_knots, int order) {
  SingleIndexFit f;
  f.tau_s = j.at("tau_s").get<double>();
  f.beta = vector_from(j.at("beta"));
  f.theta = vector_from(j.at("theta"));
  f.basis = SplineBasis(j.at("index_lower").get<double>(), j.at("index_upper").get<double>(), interior_knots, order);
  if (f.theta.size() != f.basis.size()) throw UsageError("model file: theta length does not match the spline basis");
  f.profile_objective = j.at("profile_objective").get<double>();
  f.n_positive = j.at("n_positive").get<int>();
  f.status = qr_status_from(j.at("status").get<std::string>());
  f.evaluations = j.at("evaluations").get<int>();
  return f;
}

inline json knots_to_json(const std::optional<KnotSelection>& k) {
  if (!k) return nullptr;
  return json{{"candidates", k->candidate_Ns}, {"bic", k->bic_values}, {"chosen", k->chosen_N}};
}

inline std::optional<KnotSelection> knots_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  KnotSelection k;
  k.candidate_Ns = j.at("candidates").get<std::vector<int>>();
  k.bic_values = j.at("bic").get<std::vector<double>>();
  k.chosen_N = j.at("chosen").get<int>();
  return k;
}

inline json encoding_to_json(const Encoding& e) {
  json a = json::array();
  for (const auto& c : e.columns) a.push_back({{"name", c.name}, {"categorical", c.categorical}, {"levels", c.levels}});
  return a;
}

inline Encoding encoding_from(const json& a, const std::vector<std::string>& names) {
  Encoding e;
  if (a.is_array()) {
    for (const auto& c : a) {
      e.columns.push_back({c.at("name").get<std::string>(), c.at("categorical").get<bool>(),
                           c.at("levels").get<std::vector<std::string>>()});
    }
  } else {
    for (const auto& n : names) e.columns.push_back({n, false, {}});
  }
  return e;
}

inline std::vector<double> levels_of(const json& grid) {
  std::vector<double> levels;
  for (const auto& g : grid) levels.push_back(g.at("tau_s").get<double>());
  validate_grid(levels);
  return levels;
}

}  // namespace detail

inline json model_to_json(const AnyModel& any, const Encoding& encoding) {
  json j;
  j["format"] = "ziqsi-model";
  j["version"] = 1;
  j["kind"] = model_kind(any);
  j["covariate_names"] = covariate_names(any);
  j["encoding"] = detail::encoding_to_json(encoding);
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        j["n_total"] = m.n_total;
        if constexpr (!std::is_same_v<M, QsiModel>) j["delta"] = m.delta;
        if constexpr (!std::is_same_v<M, ZiqLinearModel>) {
          j["order"] = m.order;
          j["interior_knots"] = m.interior_knots;
        }
        if constexpr (!std::is_same_v<M, QsiModel>) j["zero_model"] = detail::zero_to_json(m.zero);
        json grid = json::array();
        if constexpr (std::is_same_v<M, ZiqLinearModel>) {
          for (std::size_t k = 0; k < m.grid_levels.size(); ++k) {
            grid.push_back({{"tau_s", m.grid_levels[k]},
                            {"coefficients", detail::to_json(m.coefficients[k])},
                            {"status", to_string(m.statuses[k])}});
          }
        } else {
          j["knot_selection"] = detail::knots_to_json(m.knot_selection);
          for (const auto& f : m.grid_fits) grid.push_back(detail::index_fit_to_json(f));
        }
        j["grid"] = std::move(grid);
      },
      any);
  return j;
}

inline ModelFile model_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "ziqsi-model") throw UsageError("model file: unrecognized format tag");
    if (j.at("version").get<int>() != 1) throw UsageError("model file: unsupported version");
    const std::string kind = j.at("kind").get<std::string>();
    const auto names = j.at("covariate_names").get<std::vector<std::string>>();
    ModelFile out;
    out.encoding = detail::encoding_from(j.contains("encoding") ? j.at("encoding") : json(), names);
    const json& grid = j.at("grid");
    if (kind == "ziqsi" || kind == "qsi") {
      const int order = j.at("order").get<int>();
      const int knots = j.at("interior_knots").get<int>();
      std::vector<SingleIndexFit> fits;
      for (const auto& g : grid) fits.push_back(detail::index_fit_from(g, knots, order));
      if (kind == "ziqsi") {
        ZiqsiModel m;
        m.zero = detail::zero_from(j.at("zero_model"));
        m.grid_levels = detail::levels_of(grid);
        m.grid_fits = std::move(fits);
        m.delta = j.at("delta").get<double>();
        validate_delta(m.delta);
        m.n_total = j.at("n_total").get<int>();
        m.order = order;
        m.interior_knots = knots;
        m.knot_selection = detail::knots_from(j.at("knot_selection"));
        m.covariate_names = names;
        out.model = std::move(m);
      } else {
        QsiModel m;
        m.grid_levels = detail::levels_of(grid);
        m.grid_fits = std::move(fits);
        m.n_total = j.at("n_total").get<int>();
        m.order = order;
        m.interior_knots = knots;
        m.knot_selection = detail::knots_from(j.at("knot_selection"));
        m.covariate_names = names;
        out.model = std::move(m);
      }
    } else if (kind == "ziq-linear") {
      ZiqLinearModel m;
      m.zero = detail::zero_from(j.at("zero_model"));
      m.grid_levels = detail::levels_of(grid);
      for (const auto& g : grid) {
        m.coefficients.push_back(detail::vector_from(g.at("coefficients")));
        m.statuses.push_back(detail::qr_status_from(g.at("status").get<std::string>()));
      }
      m.delta = j.at("delta").get<double>();
      validate_delta(m.delta);
      m.n_total = j.at("n_total").get<int>();
      m.covariate_names = names;
      out.model = std::move(m);
    } else {
      throw UsageError("model file: unknown model kind '" + kind + "'");
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("model file: ") + e.what());
  }
}

inline void save_model(const std::string& path, const AnyModel& model, const Encoding& encoding) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write model file '" + path + "'");
  out << model_to_json(model, encoding).dump(2) << '\n';
}

inline ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open model file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("model file '" + path + "' is not valid JSON: " + e.what());
  }
  return model_from_json(j);
}

}  // namespace ziqsi::io
