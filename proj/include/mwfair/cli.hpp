#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mwfair/model.hpp"
#include "mwfair/sim.hpp"

namespace mwfair::cli {

using Json = nlohmann::ordered_json;

enum ExitCode : int { kOk = 0, kConfigError = 1, kNumericalFailure = 2 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A JSON number, or a string holding a decimal or an exact rational "p/q".
[[nodiscard]] double parse_number(const Json& value, const std::string& where);
[[nodiscard]] Vec parse_vector(const Json& value, const std::string& where);

struct ExperimentConfig {
  std::vector<Vec> services;
  std::optional<Vec> rho;
  std::vector<Vec> loads;  // extra load vectors (fig4)
  std::optional<Vec> theta;
  std::optional<Vec> d;
  std::optional<Vec> v;
  sim::ArrivalModel arrivals;
  std::string arrival_kind = "uniform";
  std::string trace_path;
  std::uint64_t seed = 1;
  std::size_t horizon = 100'000;
  std::vector<Vec> initial;
  std::string out = "out";
  std::size_t stride = 1;
  double tail_fraction = 0.2;
  std::size_t oracle_resolution = 300;
  std::vector<std::string> warnings;

  [[nodiscard]] ServiceSet service_set() const;
  [[nodiscard]] LoadVector load() const;  // ConfigError when rho is absent
};

/// Validates the document against the schema. Throws ConfigError.
/// Relative trace paths resolve against base_dir.
[[nodiscard]] ExperimentConfig parse_config(const Json& doc, const std::filesystem::path& base_dir = {});
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);
/// Fully resolved configuration, with every default filled in.
[[nodiscard]] Json to_json(const ExperimentConfig& config);

[[nodiscard]] Json system_to_json(const SystemSpec& spec);
[[nodiscard]] SystemSpec system_from_json(const Json& doc);

/// `%.9g` formatting used by every emitted CSV.
[[nodiscard]] std::string format_csv_number(double x);
void write_series_csv(const sim::SimTrace& trace, std::size_t stride, std::ostream& out);

struct RunOutcome {
  std::string label;
  std::string file;
  Vec x0;
  Vec rho;
  WeightMatrix d;
  sim::SimTrace trace;
  sim::DirectionEstimate estimate;
  std::optional<Vec> eta_solver;
  double ratio_deviation = 0.0;  // max |theta_hat - target|, +inf when undefined
  double seconds = 0.0;
};

struct WindowOutcome {
  bool stable = false;
  sim::WindowEstimate estimate;
  double ratio_deviation = 0.0;
};

struct ExperimentResult {
  std::string name;
  ExperimentConfig config;
  std::optional<Vec> target;
  std::vector<RunOutcome> runs;
  std::vector<WindowOutcome> windows;
  Json extra = Json::object();

  [[nodiscard]] Json summary() const;
};

[[nodiscard]] Json builtin_experiment(const std::string& name);
/// Runs a named experiment (fig3, fig4, fig5) from its built-in document merged with `overrides`.
[[nodiscard]] ExperimentResult run_experiment(const std::string& name, const Json& overrides = Json::object());
/// Simulates every initial condition of a config (exactly one of theta or d).
[[nodiscard]] ExperimentResult run_simulation(const ExperimentConfig& config);
/// One CSV per run plus summary.json.
void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir);

/// Entry point of the command-line tool; returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mwfair::cli
