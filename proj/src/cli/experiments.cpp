#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "mwfair/cli.hpp"
#include "mwfair/control.hpp"
#include "mwfair/eta.hpp"
#include "mwfair/geometry.hpp"

namespace mwfair::cli {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json optional_vec(const std::optional<Vec>& v) { return v ? vec_json(*v) : Json(nullptr); }

double deviation(const std::optional<Vec>& estimate, const std::optional<Vec>& target) {
  if (!estimate || !target) return kInf;
  return max_abs_diff(*estimate, *target);
}

sim::ArrivalModel arrivals_for(const ExperimentConfig& config, const Vec& rho) {
  sim::ArrivalModel m = config.arrivals;
  if (m.kind == sim::ArrivalKind::uniform || m.kind == sim::ArrivalKind::deterministic) {
    m.rate = rho;
    m.seed = config.seed;
  }
  m.validate();
  return m;
}

RunOutcome simulate_one(const ExperimentConfig& config, const ServiceSet& services, const Vec& rho,
                        const WeightMatrix& d, const Vec& x0, const std::optional<Vec>& target, std::string label,
                        const sim::ArrivalModel& arrivals) {
  const auto start = std::chrono::steady_clock::now();
  const SystemSpec spec = validate_system(services, LoadVector(rho), d);
  auto trace = sim::run(spec, sim::Policy::maxweight(d), arrivals, config.horizon, WorkloadVector(x0));
  auto estimate = sim::measure_direction(trace, config.tail_fraction);
  std::optional<Vec> eta_solver;
  if (!geometry::is_stabilizable(spec.rho, services)) eta_solver = eta::solve_eta(spec.rho, services, d).eta;
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::optional<Vec> reference = target;
  if (!reference && eta_solver) reference = normalize_sum(*eta_solver);
  const double dev = deviation(estimate.theta_hat, reference);
  std::string file = label + ".csv";
  return RunOutcome{std::move(label), std::move(file), x0, rho, d, std::move(trace), std::move(estimate),
                    std::move(eta_solver), dev, seconds};
}

WeightMatrix synthesized(const ExperimentConfig& config, const ServiceSet& services, const Vec& rho,
                         control::FeasibilityReport* report_out = nullptr) {
  const auto report = control::check_feasibility(FairnessTarget(*config.theta), LoadVector(rho), services);
  if (report_out) *report_out = report;
  if (report.verdict != control::Verdict::feasible)
    throw ConfigError("target direction is not achievable at this load: " +
                      std::string(control::verdict_name(report.verdict)) + " (" + report.reason + ")");
  return report.d->normalized();
}

ExperimentConfig parse_merged(const std::string& name, const Json& overrides) {
  Json doc = builtin_experiment(name);
  if (!overrides.is_object()) throw ConfigError("experiment overrides must be a JSON object");
  for (const auto& [key, value] : overrides.items()) doc[key] = value;
  return parse_config(doc);
}

ExperimentResult fig3(ExperimentConfig config) {
  ExperimentResult res{"fig3", config, config.theta, {}, {}, Json::object()};
  const auto services = config.service_set();
  const Vec rho = config.load().values();
  const auto d = synthesized(config, services, rho);
  const auto arrivals = arrivals_for(config, rho);
  for (std::size_t i = 0; i < config.initial.size(); ++i)
    res.runs.push_back(simulate_one(config, services, rho, d, config.initial[i], config.theta,
                                    "fig3_run" + std::to_string(i + 1), arrivals));
  return res;
}

ExperimentResult fig4(ExperimentConfig config) {
  ExperimentResult res{"fig4", config, config.theta, {}, {}, Json::object()};
  const auto services = config.service_set();
  if (config.loads.empty()) throw ConfigError("fig4 needs 'loads'");
  const auto partition = control::partition_overload(FairnessTarget(*config.theta), services);
  Json cells = Json::array();
  for (const auto& c : partition.cells) {
    Json subset = Json::array();
    for (auto m : c.subset) subset.push_back(m + 1);
    cells.push_back(Json{{"subset", subset}, {"v", vec_json(c.v)}, {"d", vec_json(c.d.normalized().diagonal())}});
  }
  res.extra["cells"] = cells;
  Json assignment = Json::array();
  for (std::size_t l = 0; l < config.loads.size(); ++l) {
    const Vec& rho = config.loads[l];
    const auto cell = control::locate_cell(LoadVector(rho), partition);
    assignment.push_back(Json{{"rho", vec_json(rho)}, {"cell", cell ? Json(*cell + 1) : Json(nullptr)}});
    const auto arrivals = arrivals_for(config, rho);
    for (std::size_t k = 0; k < partition.cells.size(); ++k) {
      const auto d = partition.cells[k].d.normalized();
      res.runs.push_back(simulate_one(config, services, rho, d, config.initial.front(), config.theta,
                                      "fig4_rho" + std::to_string(l + 1) + "_D" + std::to_string(k + 1), arrivals));
    }
  }
  res.extra["assignment"] = assignment;
  return res;
}

ExperimentResult fig5(ExperimentConfig config) {
  ExperimentResult res{"fig5", config, config.theta, {}, {}, Json::object()};
  const auto services = config.service_set();
  const Vec rho = config.load().values();
  const auto d = synthesized(config, services, rho);
  const auto arrivals = arrivals_for(config, rho);
  res.runs.push_back(simulate_one(config, services, rho, d, config.initial.front(), config.theta, "fig5_run1", arrivals));
  const auto& trace = res.runs.front().trace;
  const std::size_t period = arrivals.kind == sim::ArrivalKind::mode_switch ? arrivals.period : config.horizon;
  for (std::size_t begin = 0; begin < config.horizon; begin += period) {
    const std::size_t end = std::min(begin + period, config.horizon);
    WindowOutcome w;
    w.stable = arrivals.stable_at(begin);
    w.estimate = sim::measure_window(trace, begin, end, 0.25);
    w.ratio_deviation = w.stable ? kInf : deviation(w.estimate.theta_hat, config.theta);
    res.windows.push_back(std::move(w));
  }
  return res;
}

}  // namespace

Json builtin_experiment(const std::string& name) {
  if (name == "fig3")
    return Json::parse(R"({
      "services": [[4, 0], [3, 1]],
      "rho": [4, 1],
      "theta": ["2/3", "1/3"],
      "arrivals": {"kind": "uniform"},
      "seed": 1,
      "horizon": 100000,
      "initial": [[0, 0], [60, 0], [0, 20]],
      "stride": 100,
      "out": "out/fig3"
    })");
  if (name == "fig4")
    return Json::parse(R"({
      "services": [[4, 0], [3, 1], [1, 2]],
      "loads": [[4, 1], [3, 2]],
      "theta": ["2/3", "1/3"],
      "arrivals": {"kind": "uniform"},
      "seed": 1,
      "horizon": 100000,
      "initial": [[0, 0]],
      "stride": 100,
      "out": "out/fig4"
    })");
  if (name == "fig5")
    return Json::parse(R"({
      "services": [[5, 0, 0], [0, 5, 0], [0, 0, 5]],
      "rho": [3, 2, 1],
      "theta": ["1/2", "1/3", "1/6"],
      "arrivals": {"kind": "mode_switch", "stable": [1, 0, 1], "unstable": [3, 2, 1], "period": 500,
                   "stable_first": true},
      "seed": 1,
      "horizon": 4000,
      "initial": [[0, 0, 0]],
      "stride": 1,
      "out": "out/fig5"
    })");
  throw ConfigError("unknown experiment '" + name + "' (expected fig3, fig4 or fig5)");
}

ExperimentResult run_experiment(const std::string& name, const Json& overrides) {
  ExperimentConfig config = parse_merged(name, overrides);
  if (!config.theta) throw ConfigError(name + ": 'theta' is required");
  if (name == "fig3") return fig3(std::move(config));
  if (name == "fig4") return fig4(std::move(config));
  return fig5(std::move(config));
}

ExperimentResult run_simulation(const ExperimentConfig& config) {
  if (config.theta.has_value() == config.d.has_value())
    throw ConfigError("simulate: provide exactly one of 'theta' or 'd'");
  ExperimentResult res{"simulate", config, config.theta, {}, {}, Json::object()};
  const auto services = config.service_set();
  const Vec rho = config.load().values();
  WeightMatrix d = config.d ? WeightMatrix(*config.d) : synthesized(config, services, rho);
  sim::ArrivalModel arrivals = config.arrivals;
  if ((arrivals.kind == sim::ArrivalKind::uniform || arrivals.kind == sim::ArrivalKind::deterministic) &&
      arrivals.rate.empty())
    arrivals = arrivals_for(config, rho);
  if (arrivals.kind == sim::ArrivalKind::trace && arrivals.trace.size() < config.horizon)
    throw ConfigError("arrival trace has " + std::to_string(arrivals.trace.size()) + " rows, fewer than the horizon");
  for (std::size_t i = 0; i < config.initial.size(); ++i)
    res.runs.push_back(simulate_one(config, services, rho, d, config.initial[i], config.theta,
                                    "run" + std::to_string(i + 1), arrivals));
  return res;
}

Json ExperimentResult::summary() const {
  Json j = Json::object();
  j["experiment"] = name;
  j["config"] = to_json(config);
  j["target"] = optional_vec(target);
  Json runs_json = Json::array();
  double worst = 0.0;
  for (const auto& r : runs) {
    Json rj = Json::object();
    rj["label"] = r.label;
    rj["file"] = r.file;
    rj["x0"] = vec_json(r.x0);
    rj["rho"] = vec_json(r.rho);
    rj["d"] = vec_json(r.d.diagonal());
    rj["eta_hat"] = vec_json(r.estimate.eta_hat);
    rj["theta_hat"] = optional_vec(r.estimate.theta_hat);
    rj["stable"] = r.estimate.stable;
    rj["eta_solver"] = optional_vec(r.eta_solver);
    rj["ratio_deviation"] = finite_or_null(r.ratio_deviation);
    worst = std::max(worst, r.ratio_deviation);
    runs_json.push_back(rj);
  }
  j["runs"] = runs_json;
  if (name != "fig4") j["max_ratio_deviation"] = finite_or_null(worst);
  if (!windows.empty()) {
    Json ws = Json::array();
    for (std::size_t i = 0; i < windows.size(); ++i) {
      const auto& w = windows[i];
      ws.push_back(Json{{"index", i + 1},
                        {"mode", w.stable ? "stable" : "unstable"},
                        {"begin", w.estimate.begin},
                        {"end", w.estimate.end},
                        {"theta_hat", optional_vec(w.estimate.theta_hat)},
                        {"min_total", w.estimate.min_total},
                        {"end_total", w.estimate.end_total},
                        {"ratio_deviation", finite_or_null(w.ratio_deviation)}});
    }
    j["windows"] = ws;
  }
  for (const auto& [k, v] : extra.items()) j[k] = v;
  Json warn = Json::array();
  for (const auto& w : config.warnings) warn.push_back(w);
  j["warnings"] = warn;
  return j;
}

void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& r : result.runs) {
    std::ofstream f(dir / r.file, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / r.file).string());
    write_series_csv(r.trace, result.config.stride, f);
  }
  std::ofstream s(dir / "summary.json", std::ios::binary);
  if (!s) throw std::runtime_error("cannot write " + (dir / "summary.json").string());
  s << result.summary().dump(2) << '\n';
}

}  // namespace mwfair::cli
