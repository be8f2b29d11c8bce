#include <cstdio>
#include <fstream>
#include <ostream>

#include <CLI11.hpp>

#include "mwfair/cli.hpp"
#include "mwfair/control.hpp"
#include "mwfair/eta.hpp"
#include "mwfair/geometry.hpp"

namespace mwfair::cli {

namespace {

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string vec_str(std::span<const double> v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
  return s + ")";
}

std::string diag_str(const WeightMatrix& d) {
  std::string s = "diag(";
  for (std::size_t i = 0; i < d.dim(); ++i) s += (i ? ", " : "") + num(d[i]);
  return s + ")";
}

std::string subset_str(const IndexSet& s) {
  std::string out = "{";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i] + 1);
  return out + "}";
}

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> horizon;
  std::optional<std::string> out;
  std::optional<std::size_t> oracle_res;
  std::optional<std::size_t> stride;
  std::string experiment;
};

Json read_doc(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

void apply_flags(Json& doc, const Flags& f) {
  if (!doc.is_object()) throw ConfigError("config: top level must be a JSON object");
  if (f.seed) doc["seed"] = *f.seed;
  if (f.horizon) doc["horizon"] = *f.horizon;
  if (f.out) doc["out"] = *f.out;
  if (f.oracle_res) doc["oracle_resolution"] = *f.oracle_res;
  if (f.stride) doc["stride"] = *f.stride;
}

ExperimentConfig config_from(const Flags& f, std::ostream& err) {
  if (f.config.empty()) throw ConfigError("--config PATH is required for this command");
  Json doc = read_doc(f.config);
  apply_flags(doc, f);
  auto c = parse_config(doc, std::filesystem::path(f.config).parent_path());
  for (const auto& w : c.warnings) err << "warning: " << w << '\n';
  return c;
}

FairnessTarget target_of(const ExperimentConfig& c) {
  if (!c.theta) throw ConfigError("config: 'theta' is required for this command");
  return FairnessTarget(*c.theta);
}

WeightMatrix weights_of(const ExperimentConfig& c, const ServiceSet& services, std::ostream& err) {
  if (c.d) return WeightMatrix(*c.d);
  if (c.theta) {
    const auto rep = control::check_feasibility(target_of(c), c.load(), services);
    if (rep.d) return rep.d->normalized();
    err << "warning: theta is not achievable here (" << control::verdict_name(rep.verdict)
        << "); using the identity matrix\n";
  }
  return WeightMatrix::identity(services.dim());
}

int cmd_eta(const Flags& f, std::ostream& out, std::ostream& err) {
  const auto c = config_from(f, err);
  const auto services = c.service_set();
  const auto rho = c.load();
  const auto d = weights_of(c, services, err);
  eta::EtaSolution sol;
  try {
    sol = eta::solve_eta(rho, services, d);
  } catch (const eta::NonConvergence& e) {
    err << "error: " << e.what() << "\n";
    out << "best eta = " << vec_str(e.best().eta) << "\n";
    return kNumericalFailure;
  }
  out << "status = " << (sol.stable ? "STABLE" : "OVERLOADED") << "\n";
  out << "D = " << diag_str(d) << "\n";
  out << "eta = " << vec_str(sol.eta) << "\n";
  out << "alpha = " << vec_str(sol.alpha.values()) << "\n";
  out << "objective = " << num(sol.objective) << "\n";
  out << "kkt_residual = " << num(sol.kkt_residual) << "\n";
  out << "iterations = " << sol.iterations << "\n";
  if (f.oracle_res) {
    const auto o = eta::eta_oracle(rho, services, d, *f.oracle_res);
    out << "oracle_eta = " << vec_str(o.eta) << "\n";
    out << "oracle_points = " << o.points << "\n";
    out << "oracle_deviation = " << num(max_abs_diff(o.eta, sol.eta)) << "\n";
  }
  return kOk;
}

int cmd_oracle(const Flags& f, std::ostream& out, std::ostream& err) {
  const auto c = config_from(f, err);
  const auto services = c.service_set();
  const auto rho = c.load();
  const auto d = weights_of(c, services, err);
  const auto o = eta::eta_oracle(rho, services, d, c.oracle_resolution);
  out << "resolution = " << c.oracle_resolution << "\n";
  out << "points = " << o.points << "\n";
  out << "eta = " << vec_str(o.eta) << "\n";
  out << "alpha = " << vec_str(o.alpha) << "\n";
  out << "objective = " << num(o.objective) << "\n";
  return kOk;
}

int cmd_feasible(const Flags& f, std::ostream& out, std::ostream& err) {
  const auto c = config_from(f, err);
  const auto services = c.service_set();
  const auto rho = c.load();
  const auto theta = target_of(c);
  const auto rep = control::check_feasibility(theta, rho, services);
  out << "verdict = " << control::verdict_name(rep.verdict) << "\n";
  out << "reason = " << rep.reason << "\n";
  if (rep.verdict == control::Verdict::feasible) {
    out << "subset = " << subset_str(*rep.subset) << "\n";
    out << "v = " << vec_str(rep.v->v) << "\n";
    out << "alpha = " << vec_str(rep.alpha->values()) << "\n";
    out << "eta = " << vec_str(*rep.eta) << "\n";
    out << "D = " << diag_str(rep.d->normalized()) << "\n";
    out << "verified = " << (rep.verified ? "true" : "false") << "\n";
  }
  if (rep.verdict != control::Verdict::stable && rho.dim() <= 3) {
    const auto dirs = control::feasible_directions(rho, services);
    for (const auto& p : dirs.pieces) {
      out << "directions " << subset_str(p.subset) << " =";
      for (const auto& g : p.generators) out << ' ' << vec_str(g);
      out << "\n";
    }
  }
  if (rep.verdict == control::Verdict::feasible && !rep.verified) return kNumericalFailure;
  return kOk;
}

int cmd_partition(const Flags& f, std::ostream& out, std::ostream& err) {
  const auto c = config_from(f, err);
  const auto services = c.service_set();
  const auto part = control::partition_overload(target_of(c), services);
  out << "cells = " << part.cells.size() << "\n";
  for (std::size_t i = 0; i < part.cells.size(); ++i) {
    const auto& cell = part.cells[i];
    out << "cell " << i + 1 << ": subset = " << subset_str(cell.subset) << ", v = " << vec_str(cell.v)
        << ", D = " << diag_str(cell.d.normalized()) << "\n";
  }
  if (c.rho) {
    const auto rho = c.load();
    if (geometry::is_stabilizable(rho, services)) {
      out << "rho = " << vec_str(rho.values()) << " is stable\n";
    } else {
      const auto idx = control::locate_cell(rho, part);
      out << "rho = " << vec_str(rho.values()) << " -> " << (idx ? "cell " + std::to_string(*idx + 1) : "none")
          << "\n";
    }
  }
  return kOk;
}

int cmd_synth(const Flags& f, std::ostream& out, std::ostream& err) {
  const auto c = config_from(f, err);
  const auto theta = target_of(c);
  if (c.v) {
    const auto d = control::synthesize_d(theta.values(), *c.v);
    out << "D = " << diag_str(d.normalized()) << "\n";
    out << "D_raw = " << diag_str(d) << "\n";
    return kOk;
  }
  const auto rep = control::check_feasibility(theta, c.load(), c.service_set());
  out << "verdict = " << control::verdict_name(rep.verdict) << "\n";
  if (!rep.d) return kConfigError;
  out << "D = " << diag_str(rep.d->normalized()) << "\n";
  return kOk;
}

void print_runs(const ExperimentResult& r, std::ostream& out) {
  for (const auto& run : r.runs) {
    out << run.label << ": eta_hat = " << vec_str(run.estimate.eta_hat);
    if (run.estimate.theta_hat)
      out << ", theta_hat = " << vec_str(*run.estimate.theta_hat) << ", deviation = " << num(run.ratio_deviation);
    else
      out << ", STABLE";
    out << "\n";
  }
  for (std::size_t i = 0; i < r.windows.size(); ++i) {
    const auto& w = r.windows[i];
    out << "window " << i + 1 << " [" << w.estimate.begin << ", " << w.estimate.end << ") "
        << (w.stable ? "stable" : "unstable") << ": min_total = " << num(w.estimate.min_total);
    if (!w.stable && w.estimate.theta_hat)
      out << ", theta_hat = " << vec_str(*w.estimate.theta_hat) << ", deviation = " << num(w.ratio_deviation);
    out << "\n";
  }
}

int cmd_simulate(const Flags& f, std::ostream& out, std::ostream& err) {
  const auto c = config_from(f, err);
  const auto res = run_simulation(c);
  write_outputs(res, c.out);
  print_runs(res, out);
  out << "wrote " << res.runs.size() << " CSV file(s) and summary.json to " << c.out << "\n";
  return kOk;
}

int cmd_experiment(const Flags& f, std::ostream& out, std::ostream& err) {
  Json overrides = f.config.empty() ? Json::object() : read_doc(f.config);
  apply_flags(overrides, f);
  const auto res = run_experiment(f.experiment, overrides);
  for (const auto& w : res.config.warnings) err << "warning: " << w << '\n';
  write_outputs(res, res.config.out);
  print_runs(res, out);
  out << "wrote " << res.runs.size() << " CSV file(s) and summary.json to " << res.config.out << "\n";
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Overloaded MaxWeight queues: growth rays, fairness control and simulation", "mwfair"};
  app.fallthrough();
  app.require_subcommand(1);
  Flags f;
  app.add_option("--config", f.config, "JSON configuration file");
  app.add_option("--seed", f.seed, "PRNG seed");
  app.add_option("--horizon", f.horizon, "simulation horizon in slots");
  app.add_option("--out", f.out, "output directory");
  app.add_option("--oracle-res", f.oracle_res, "lattice resolution of the brute-force oracle");
  app.add_option("--stride", f.stride, "CSV downsampling stride");

  using Handler = int (*)(const Flags&, std::ostream&, std::ostream&);
  std::vector<std::pair<CLI::App*, Handler>> commands = {
      {app.add_subcommand("eta", "solve for the growth ray"), cmd_eta},
      {app.add_subcommand("feasible", "decide whether a fairness target is achievable"), cmd_feasible},
      {app.add_subcommand("partition", "split the overload region by relevant boundary"), cmd_partition},
      {app.add_subcommand("synth", "synthesize the MaxWeight matrix for a target"), cmd_synth},
      {app.add_subcommand("simulate", "simulate the configured system"), cmd_simulate},
      {app.add_subcommand("oracle", "brute-force lattice search for the growth ray"), cmd_oracle},
  };
  auto* exp = app.add_subcommand("experiment", "reproduce a named experiment");
  exp->add_option("name", f.experiment, "fig3, fig4 or fig5")->required()->check(CLI::IsMember({"fig3", "fig4", "fig5"}));
  commands.emplace_back(exp, cmd_experiment);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    for (const auto& [sub, handler] : commands)
      if (sub->parsed()) return handler(f, out, err);
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::invalid_argument& e) {  // includes ValidationError
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::length_error& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::domain_error& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const eta::BudgetExceeded& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  }
}

}  // namespace mwfair::cli
