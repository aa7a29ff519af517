#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ziqsi/io/config.hpp"
#include "ziqsi/io/csv.hpp"
#include "ziqsi/io/model_json.hpp"
#include "ziqsi/io/report.hpp"
#include "ziqsi/ziqsi.hpp"

namespace {

using namespace ziqsi;

constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_levels(const std::string& s) {
  std::vector<double> out;
  std::size_t row = 0;
  for (const auto& item : split_list(s)) out.push_back(io::parse_number(item, "tau", row++));
  require(!out.empty(), "no tau values given");
  for (double t : out) require_level(t);
  return out;
}

/// Output stream that is either stdout ("-" or empty) or a file.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path);
      if (!file_) throw UsageError("cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

struct FitArgs {
  std::string data, response, covariates, dummies, config, out;
  std::optional<std::string> method;
  std::optional<double> delta;
  std::optional<int> order, knots, threads;
  std::optional<std::uint64_t> seed;
};

io::AnyModel fit_any(const std::string& method, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const ZiqsiConfig& fit, std::uint64_t seed, const std::vector<std::string>& names) {
  io::AnyModel model;
  if (method == "ziqsi") {
    ZiqsiModel m = fit_ziqsi(X, y, fit);
    m.covariate_names = names;
    model = std::move(m);
  } else if (method == "ziq-linear") {
    ZiqLinearModel m = fit_ziq_linear(X, y, fit);
    m.covariate_names = names;
    model = std::move(m);
  } else if (method == "qsi") {
    QsiModel m = fit_qsi(X, y, fit, seed);
    m.covariate_names = names;
    model = std::move(m);
  } else {
    throw UsageError("unknown method '" + method + "' (expected ziqsi, ziq-linear or qsi)");
  }
  return model;
}

int run_fit(const FitArgs& a) {
  io::RunConfig rc;
  rc.fit.threads = default_thread_count();
  if (!a.config.empty()) rc = io::load_run_config(a.config);
  if (a.method) rc.method = *a.method;
  if (a.delta) rc.fit.delta = *a.delta;
  if (a.order) rc.fit.order = *a.order;
  if (a.knots) rc.fit.interior_knots = *a.knots;
  if (a.threads) rc.fit.threads = *a.threads;
  if (a.seed) rc.seed = *a.seed;
  validate_delta(rc.fit.delta);
  require(rc.fit.order >= 2, "order must be at least 2");
  require(rc.fit.threads >= 1, "threads must be at least 1");

  io::Encoding encoding;
  const Dataset data = io::ingest_csv(a.data, a.response, split_list(a.covariates), split_list(a.dummies), &encoding);
  if (data.dropped_rows > 0) {
    std::cerr << "dropped " << data.dropped_rows << " row(s) with missing values\n";
  }
  const auto start = std::chrono::steady_clock::now();
  const io::AnyModel model = fit_any(rc.method, data.X, data.y, rc.fit, rc.seed, data.covariate_names);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  io::save_model(a.out, model, encoding);
  std::cerr << "fitted " << io::model_kind(model) << " on " << data.n() << " rows, " << data.p()
            << " covariates in " << secs << " s; wrote " << a.out << '\n';
  return 0;
}

int run_predict(const std::string& model_path, const std::string& covariates, const std::string& taus,
                const std::string& out_path) {
  const io::ModelFile mf = io::load_model(model_path);
  const std::vector<double> levels = parse_levels(taus);
  const Dataset data = io::read_covariates(covariates, mf.encoding);
  if (data.dropped_rows > 0) std::cerr << "dropped " << data.dropped_rows << " row(s) with missing values\n";
  Output out(out_path);
  io::CsvWriter w(out.stream());
  w.row("row_id", "tau", "value", "region", "tau_s");
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const Eigen::VectorXd x = data.X.row(i).transpose();
    for (double t : levels) {
      const QuantilePrediction p = io::predict_quantile(mf.model, x, t);
      w.row(static_cast<long long>(i + 1), t, p.value, to_string(p.region), p.tau_s_used);
    }
  }
  return 0;
}

int run_curve(const std::string& model_path, const std::string& x_values, const std::string& row_csv,
              const std::string& taus, const std::string& out_path) {
  const io::ModelFile mf = io::load_model(model_path);
  Eigen::VectorXd x;
  if (!row_csv.empty()) {
    const Dataset data = io::read_covariates(row_csv, mf.encoding);
    require(data.n() >= 1, "curve: covariate file has no complete row");
    x = data.X.row(0).transpose();
  } else {
    const auto items = split_list(x_values);
    x.resize(static_cast<Eigen::Index>(items.size()));
    for (std::size_t k = 0; k < items.size(); ++k) x[static_cast<Eigen::Index>(k)] = io::parse_number(items[k], "x", 0);
  }
  require(x.size() == io::covariate_count(mf.model),
          "curve: expected " + std::to_string(io::covariate_count(mf.model)) + " covariate values");
  const std::vector<double> levels = taus.empty() ? default_grid() : parse_levels(taus);
  Output out(out_path);
  io::CsvWriter w(out.stream());
  w.row("tau", "value", "region", "tau_s");
  std::vector<double> sorted = levels, values;
  std::sort(sorted.begin(), sorted.end());
  for (double t : levels) {
    const QuantilePrediction p = io::predict_quantile(mf.model, x, t);
    w.row(t, p.value, to_string(p.region), p.tau_s_used);
  }
  for (double t : sorted) values.push_back(io::predict_quantile(mf.model, x, t).value);
  if (const std::size_t crossings = count_crossings(values)) {
    std::cerr << "note: curve decreases at " << crossings << " of " << values.size() - 1 << " steps\n";
  }
  return 0;
}

struct AqeArgs {
  std::string model, data, response, covariate, out;
  double u = 1.0, v = 0.0, tau = 0.5;
  int bootstrap = 0;
  std::uint64_t seed = 1;
  std::optional<int> threads;
};

int run_aqe(const AqeArgs& a) {
  const io::ModelFile mf = io::load_model(a.model);
  const auto& names = io::covariate_names(mf.model);
  const auto it = std::find(names.begin(), names.end(), a.covariate);
  if (it == names.end()) throw UsageError("aqe: model has no covariate named '" + a.covariate + "'");
  const auto j = static_cast<Eigen::Index>(it - names.begin());
  require_level(a.tau);

  Dataset data;
  if (a.bootstrap > 0) {
    require(!a.response.empty(), "aqe: --bootstrap needs --response to refit");
    data = io::encode_table(io::read_csv(a.data), a.response, {}, {}, nullptr, &mf.encoding);
  } else {
    data = io::read_covariates(a.data, mf.encoding);
  }

  nlohmann::ordered_json j_out;
  auto point_json = [&](const AqeResult& r) {
    return nlohmann::ordered_json{{"covariate", a.covariate}, {"column", r.covariate}, {"u", r.level_u},
                                  {"v", r.level_v},           {"tau", r.tau},         {"estimate", r.estimate},
                                  {"n_averaged", r.n_averaged}};
  };
  if (a.bootstrap == 0) {
    j_out = point_json(std::visit([&](const auto& m) { return compute_aqe(m, data.X, j, a.u, a.v, a.tau); },
                                  mf.model));
  } else {
    const int threads = a.threads.value_or(default_thread_count());
    const std::string kind = io::model_kind(mf.model);
    ZiqsiConfig fit;
    fit.threads = 1;
    std::visit(
        [&](const auto& m) {
          using M = std::decay_t<decltype(m)>;
          fit.grid = m.grid_levels;
          if constexpr (!std::is_same_v<M, QsiModel>) fit.delta = m.delta;
          if constexpr (!std::is_same_v<M, ZiqLinearModel>) {
            fit.order = m.order;
            fit.interior_knots = m.interior_knots;
          }
        },
        mf.model);
    const AqeBootstrap boot = std::visit(
        [&](const auto& m) {
          using M = std::decay_t<decltype(m)>;
          auto refit = [&](const Eigen::MatrixXd& X, const Eigen::VectorXd& y) -> M {
            return std::get<M>(fit_any(kind, X, y, fit, a.seed, names));
          };
          return bootstrap_aqe(data.X, data.y, refit, j, a.u, a.v, a.tau, a.bootstrap, a.seed, threads);
        },
        mf.model);
    j_out = point_json(boot.point);
    j_out["bootstrap"] = {{"resamples", a.bootstrap},
                          {"failures", boot.failures},
                          {"standard_error", boot.standard_error},
                          {"lower", boot.lower},
                          {"upper", boot.upper}};
  }
  Output out(a.out);
  out.stream() << j_out.dump(2) << '\n';
  return 0;
}

int run_simulate(const std::string& config, int replicate, const std::string& out_path) {
  const sim::SimConfig c = io::load_sim_config(config);
  require(replicate >= 0, "simulate: replicate must be non-negative");
  const Dataset data = sim::generate_dataset(c.design, c.n, c.seed, static_cast<std::uint64_t>(replicate));
  Output out(out_path);
  io::write_dataset_csv(out.stream(), data);
  return 0;
}

struct BenchArgs {
  std::string config, prefix;
  std::optional<int> threads, replicates, n;
  std::optional<std::uint64_t> seed;
};

int run_benchmark(const BenchArgs& a) {
  sim::SimConfig c = io::load_sim_config(a.config);
  if (a.threads) c.threads = *a.threads;
  if (a.replicates) c.replicates = *a.replicates;
  if (a.n) c.n = *a.n;
  if (a.seed) c.seed = *a.seed;
  sim::validate(c);
  require(c.threads >= 1, "threads must be at least 1");

  const auto start = std::chrono::steady_clock::now();
  const sim::StudyReport report = sim::run_study(c);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  {
    std::ofstream f(a.prefix + ".json");
    if (!f) throw UsageError("cannot write '" + a.prefix + ".json'");
    f << io::study_to_json(report).dump(2) << '\n';
  }
  {
    std::ofstream f(a.prefix + "_metrics.csv");
    io::write_metrics_csv(f, report);
  }
  {
    std::ofstream f(a.prefix + "_bands.csv");
    io::write_band_csv(f, report);
  }
  std::cerr << report.successful_replicates << " of " << c.replicates << " replicates succeeded in " << secs
            << " s\n";
  for (const auto& r : report.reports) {
    std::cerr << "  " << r.method << " / " << r.profile << ": RIBIAS " << r.ribias << "%, RIVAR " << r.rivar
              << "%, RIMSE " << r.rimse << "%\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-inflated quantile single-index regression"};
  app.require_subcommand(1);

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit a model to a CSV dataset and write it as JSON");
  fit->add_option("--data", fa.data, "Input CSV")->required();
  fit->add_option("--response", fa.response, "Response column")->required();
  fit->add_option("--covariates", fa.covariates, "Comma-separated covariate columns (default: all others)");
  fit->add_option("--dummy", fa.dummies, "Comma-separated categorical columns to dummy-code");
  fit->add_option("--config", fa.config, "Run config JSON");
  fit->add_option("--method", fa.method, "ziqsi | ziq-linear | qsi");
  fit->add_option("--delta", fa.delta, "Interpolation band exponent in (0, 0.5)");
  fit->add_option("--order", fa.order, "Spline order (4 = cubic)");
  fit->add_option("--knots", fa.knots, "Fixed number of interior knots (default: BIC)");
  fit->add_option("--seed", fa.seed, "Jitter seed for qsi");
  fit->add_option("--threads", fa.threads, "Worker threads (default: ZIQSI_THREADS or 1)");
  fit->add_option("--out", fa.out, "Model JSON path")->required();

  std::string p_model, p_cov, p_tau, p_out;
  auto* predict = app.add_subcommand("predict", "Predict conditional quantiles for covariate rows");
  predict->add_option("--model", p_model, "Model JSON")->required();
  predict->add_option("--covariates", p_cov, "Covariate CSV (raw columns, as at fit time)")->required();
  predict->add_option("--tau", p_tau, "Comma-separated quantile levels")->required();
  predict->add_option("--out", p_out, "Output CSV (default: stdout)");

  std::string c_model, c_x, c_row, c_tau, c_out;
  auto* curve = app.add_subcommand("curve", "Quantile curve over a tau grid for one covariate row");
  curve->add_option("--model", c_model, "Model JSON")->required();
  auto* c_xopt = curve->add_option("--x", c_x, "Comma-separated encoded covariate values");
  auto* c_rowopt = curve->add_option("--row", c_row, "CSV whose first complete row is used");
  c_xopt->excludes(c_rowopt);
  curve->add_option("--tau", c_tau, "Comma-separated levels (default 0.01..0.99)");
  curve->add_option("--out", c_out, "Output CSV (default: stdout)");

  AqeArgs aa;
  auto* aqe = app.add_subcommand("aqe", "Average quantile effect of switching one covariate");
  aqe->add_option("--model", aa.model, "Model JSON")->required();
  aqe->add_option("--data", aa.data, "CSV supplying the covariate sample")->required();
  aqe->add_option("--covariate", aa.covariate, "Encoded covariate name (e.g. x1 or group:b)")->required();
  aqe->add_option("--u", aa.u, "Level u (default 1)");
  aqe->add_option("--v", aa.v, "Level v (default 0)");
  aqe->add_option("--tau", aa.tau, "Quantile level")->required();
  aqe->add_option("--bootstrap", aa.bootstrap, "Bootstrap resamples (0 = point estimate only)")
      ->check(CLI::NonNegativeNumber);
  aqe->add_option("--response", aa.response, "Response column (needed for --bootstrap)");
  aqe->add_option("--seed", aa.seed, "Bootstrap seed");
  aqe->add_option("--threads", aa.threads, "Worker threads");
  aqe->add_option("--out", aa.out, "Output JSON (default: stdout)");

  std::string s_config, s_out;
  int s_rep = 0;
  auto* simulate = app.add_subcommand("simulate", "Draw one dataset from the simulation design");
  simulate->add_option("--config", s_config, "Simulation config JSON")->required();
  simulate->add_option("--replicate", s_rep, "Replicate index selecting the random stream");
  simulate->add_option("--out", s_out, "Output CSV (default: stdout)");

  BenchArgs ba;
  auto* bench = app.add_subcommand("benchmark", "Run the Monte Carlo study and write JSON + CSV reports");
  bench->add_option("--config", ba.config, "Simulation config JSON")->required();
  bench->add_option("--out", ba.prefix, "Output prefix (writes PREFIX.json, PREFIX_metrics.csv, PREFIX_bands.csv)")
      ->required();
  bench->add_option("--threads", ba.threads, "Worker threads");
  bench->add_option("--replicates", ba.replicates, "Override the replicate count");
  bench->add_option("--n", ba.n, "Override the sample size");
  bench->add_option("--seed", ba.seed, "Override the seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*fit) return run_fit(fa);
    if (*predict) return run_predict(p_model, p_cov, p_tau, p_out);
    if (*curve) {
      if (c_x.empty() && c_row.empty()) throw UsageError("curve: give --x or --row");
      return run_curve(c_model, c_x, c_row, c_tau, c_out);
    }
    if (*aqe) return run_aqe(aa);
    if (*simulate) return run_simulate(s_config, s_rep, s_out);
    if (*bench) return run_benchmark(ba);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}
