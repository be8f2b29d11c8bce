#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "mwfair/cli.hpp"

namespace mwfair::cli {

namespace {

constexpr std::int64_t kExactInt = std::int64_t{1} << 53;

std::int64_t parse_int(std::string_view s, const std::string& where) {
  std::int64_t v = 0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw ConfigError(where + ": malformed rational");
  if (v > kExactInt || v < -kExactInt) throw ConfigError(where + ": rational term exceeds 2^53");
  return v;
}

std::uint64_t parse_count(const Json& value, const std::string& where) {
  if (value.is_number_unsigned()) return value.get<std::uint64_t>();
  if (value.is_number_integer() && value.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(value.get<std::int64_t>());
  throw ConfigError(where + ": expected a non-negative integer");
}

std::vector<Vec> parse_rows(const Json& value, const std::string& where) {
  if (!value.is_array() || value.empty()) throw ConfigError(where + ": expected a non-empty array of vectors");
  std::vector<Vec> rows;
  for (std::size_t i = 0; i < value.size(); ++i)
    rows.push_back(parse_vector(value[i], where + "[" + std::to_string(i) + "]"));
  return rows;
}

void reject_unknown(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

Json rows_json(const std::vector<Vec>& rows) {
  Json a = Json::array();
  for (const auto& r : rows) a.push_back(vec_json(r));
  return a;
}

}  // namespace

double parse_number(const Json& value, const std::string& where) {
  double out = 0.0;
  if (value.is_number()) {
    out = value.get<double>();
  } else if (value.is_string()) {
    const std::string s = value.get<std::string>();
    const auto slash = s.find('/');
    if (slash != std::string::npos) {
      const std::int64_t p = parse_int(std::string_view(s).substr(0, slash), where);
      const std::int64_t q = parse_int(std::string_view(s).substr(slash + 1), where);
      if (q == 0) throw ConfigError(where + ": zero denominator");
      out = static_cast<double>(p) / static_cast<double>(q);
    } else {
      std::string_view sv = s;
      if (!sv.empty() && sv.front() == '+') sv.remove_prefix(1);
      const auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), out);
      if (ec != std::errc{} || ptr != sv.data() + sv.size() || sv.empty())
        throw ConfigError(where + ": malformed number '" + s + "'");
    }
  } else {
    throw ConfigError(where + ": expected a number or a rational string");
  }
  if (!std::isfinite(out)) throw ConfigError(where + ": number is not finite");
  return out;
}

Vec parse_vector(const Json& value, const std::string& where) {
  if (!value.is_array() || value.empty()) throw ConfigError(where + ": expected a non-empty array");
  Vec v;
  for (std::size_t i = 0; i < value.size(); ++i) v.push_back(parse_number(value[i], where + "[" + std::to_string(i) + "]"));
  return v;
}

ServiceSet ExperimentConfig::service_set() const { return ServiceSet::from_rows(services); }

LoadVector ExperimentConfig::load() const {
  if (!rho) throw ConfigError("config: 'rho' is required for this command");
  return LoadVector(*rho);
}

ExperimentConfig parse_config(const Json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config: top level must be a JSON object");
  reject_unknown(doc,
                 {"services", "rho", "loads", "theta", "d", "v", "arrivals", "seed", "horizon", "initial", "out",
                  "stride", "tail_fraction", "oracle_resolution"},
                 "config");
  ExperimentConfig c;
  if (!doc.contains("services")) throw ConfigError("config: 'services' is required");
  c.services = parse_rows(doc["services"], "services");
  const std::size_t dim = c.services.front().size();
  auto check_dim = [&](const Vec& v, const std::string& where) {
    if (v.size() != dim)
      throw ConfigError(where + ": expected " + std::to_string(dim) + " entries, got " + std::to_string(v.size()));
  };
  try {
    (void)c.service_set();
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("services: ") + e.what());
  }

  if (doc.contains("rho")) {
    c.rho = parse_vector(doc["rho"], "rho");
    check_dim(*c.rho, "rho");
  }
  if (doc.contains("loads")) {
    c.loads = parse_rows(doc["loads"], "loads");
    for (std::size_t i = 0; i < c.loads.size(); ++i) check_dim(c.loads[i], "loads[" + std::to_string(i) + "]");
  }
  if (doc.contains("theta")) {
    Vec raw = parse_vector(doc["theta"], "theta");
    check_dim(raw, "theta");
    std::string warning;
    try {
      c.theta = FairnessTarget::normalize(std::move(raw), &warning).values();
    } catch (const ValidationError& e) {
      throw ConfigError(std::string("theta: ") + e.what());
    }
    if (!warning.empty()) c.warnings.push_back("theta: " + warning);
  }
  if (doc.contains("d")) {
    c.d = parse_vector(doc["d"], "d");
    check_dim(*c.d, "d");
  }
  if (doc.contains("v")) {
    c.v = parse_vector(doc["v"], "v");
    check_dim(*c.v, "v");
  }
  if (doc.contains("seed")) c.seed = parse_count(doc["seed"], "seed");
  if (doc.contains("horizon")) c.horizon = parse_count(doc["horizon"], "horizon");
  if (c.horizon == 0) throw ConfigError("horizon: must be at least 1");
  if (doc.contains("stride")) c.stride = parse_count(doc["stride"], "stride");
  if (c.stride == 0) throw ConfigError("stride: must be at least 1");
  if (doc.contains("oracle_resolution")) c.oracle_resolution = parse_count(doc["oracle_resolution"], "oracle_resolution");
  if (c.oracle_resolution == 0) throw ConfigError("oracle_resolution: must be at least 1");
  if (doc.contains("tail_fraction")) c.tail_fraction = parse_number(doc["tail_fraction"], "tail_fraction");
  if (!(c.tail_fraction > 0.0 && c.tail_fraction < 1.0)) throw ConfigError("tail_fraction: must lie in (0, 1)");
  if (doc.contains("out")) {
    if (!doc["out"].is_string()) throw ConfigError("out: expected a path string");
    c.out = doc["out"].get<std::string>();
  }
  if (doc.contains("initial")) {
    c.initial = parse_rows(doc["initial"], "initial");
    for (std::size_t i = 0; i < c.initial.size(); ++i) {
      check_dim(c.initial[i], "initial[" + std::to_string(i) + "]");
      for (double x : c.initial[i])
        if (x < 0.0) throw ConfigError("initial: workloads must be non-negative");
    }
  } else {
    c.initial.push_back(Vec(dim, 0.0));
  }

  Json arr = doc.contains("arrivals") ? doc["arrivals"] : Json::object();
  if (!arr.is_object()) throw ConfigError("arrivals: expected an object");
  reject_unknown(arr, {"kind", "rate", "integer", "path", "stable", "unstable", "period", "stable_first"}, "arrivals");
  if (arr.contains("kind")) {
    if (!arr["kind"].is_string()) throw ConfigError("arrivals.kind: expected a string");
    c.arrival_kind = arr["kind"].get<std::string>();
  }
  auto flag = [&](const char* key, bool fallback) {
    if (!arr.contains(key)) return fallback;
    if (!arr[key].is_boolean()) throw ConfigError(std::string("arrivals.") + key + ": expected true or false");
    return arr[key].get<bool>();
  };
  try {
    if (c.arrival_kind == "uniform" || c.arrival_kind == "deterministic") {
      Vec rate;
      if (arr.contains("rate")) {
        rate = parse_vector(arr["rate"], "arrivals.rate");
      } else if (c.rho) {
        rate = *c.rho;
      }
      if (!rate.empty()) {
        check_dim(rate, "arrivals.rate");
        c.arrivals = c.arrival_kind == "uniform" ? sim::ArrivalModel::uniform(rate, c.seed, flag("integer", false))
                                                 : sim::ArrivalModel::deterministic(rate);
      } else {
        c.arrivals.kind = c.arrival_kind == "uniform" ? sim::ArrivalKind::uniform : sim::ArrivalKind::deterministic;
        c.arrivals.integer = flag("integer", false);
      }
    } else if (c.arrival_kind == "trace") {
      if (!arr.contains("path") || !arr["path"].is_string()) throw ConfigError("arrivals.path: required for kind 'trace'");
      std::filesystem::path p = arr["path"].get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      c.trace_path = p.string();
      c.arrivals = sim::ArrivalModel::from_trace(sim::load_trace(p));
      check_dim(c.arrivals.trace.front(), "arrival trace");
    } else if (c.arrival_kind == "mode_switch") {
      if (!arr.contains("stable") || !arr.contains("unstable"))
        throw ConfigError("arrivals: kind 'mode_switch' needs 'stable' and 'unstable' rates");
      Vec st = parse_vector(arr["stable"], "arrivals.stable"), un = parse_vector(arr["unstable"], "arrivals.unstable");
      check_dim(st, "arrivals.stable");
      check_dim(un, "arrivals.unstable");
      const std::size_t period = arr.contains("period") ? parse_count(arr["period"], "arrivals.period") : 500;
      c.arrivals = sim::ArrivalModel::mode_switch(st, un, period, c.seed, flag("stable_first", true));
      c.arrivals.integer = flag("integer", false);
      if (!c.rho) c.rho = un;
    } else {
      throw ConfigError("arrivals.kind: expected uniform, deterministic, trace or mode_switch");
    }
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("arrivals: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(doc, path.parent_path());
}

Json to_json(const ExperimentConfig& c) {
  Json j = Json::object();
  j["services"] = rows_json(c.services);
  if (c.rho) j["rho"] = vec_json(*c.rho);
  if (!c.loads.empty()) j["loads"] = rows_json(c.loads);
  if (c.theta) j["theta"] = vec_json(*c.theta);
  if (c.d) j["d"] = vec_json(*c.d);
  if (c.v) j["v"] = vec_json(*c.v);
  Json arr = Json::object();
  arr["kind"] = c.arrival_kind;
  const auto& m = c.arrivals;
  if (c.arrival_kind == "uniform" || c.arrival_kind == "deterministic") {
    if (!m.rate.empty()) arr["rate"] = vec_json(m.rate);
    if (c.arrival_kind == "uniform") arr["integer"] = m.integer;
  } else if (c.arrival_kind == "trace") {
    arr["path"] = c.trace_path;
  } else {
    arr["stable"] = vec_json(m.stable_rate);
    arr["unstable"] = vec_json(m.unstable_rate);
    arr["period"] = m.period;
    arr["stable_first"] = m.stable_first;
    arr["integer"] = m.integer;
  }
  j["arrivals"] = arr;
  j["seed"] = c.seed;
  j["horizon"] = c.horizon;
  j["initial"] = rows_json(c.initial);
  j["out"] = c.out;
  j["stride"] = c.stride;
  j["tail_fraction"] = c.tail_fraction;
  j["oracle_resolution"] = c.oracle_resolution;
  return j;
}

Json system_to_json(const SystemSpec& spec) {
  Json j = Json::object();
  std::vector<Vec> rows;
  for (const auto& s : spec.services.vectors()) rows.push_back(s.values());
  j["services"] = rows_json(rows);
  j["rho"] = vec_json(spec.rho.values());
  j["d"] = vec_json(spec.d.diagonal());
  return j;
}

SystemSpec system_from_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("services") || !doc.contains("rho") || !doc.contains("d"))
    throw ConfigError("system: expected 'services', 'rho' and 'd'");
  try {
    return validate_system(ServiceSet::from_rows(parse_rows(doc["services"], "services")),
                           LoadVector(parse_vector(doc["rho"], "rho")), WeightMatrix(parse_vector(doc["d"], "d")));
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("system: ") + e.what());
  }
}

std::string format_csv_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

void write_series_csv(const sim::SimTrace& trace, std::size_t stride, std::ostream& out) {
  const std::size_t dim = trace.dim();
  out << "t";
  for (const char* prefix : {"x_", "scaled_", "ratio_"})
    for (std::size_t q = 1; q <= dim; ++q) out << ',' << prefix << q;
  out << ",chosen\n";
  auto row = [&](std::size_t t) {
    out << t;
    for (double v : trace.x(t)) out << ',' << format_csv_number(v);
    for (double v : trace.scaled(t)) out << ',' << format_csv_number(v);
    for (double v : trace.ratio(t)) out << ',' << format_csv_number(v);
    const std::int64_t m = t < trace.horizon() ? trace.chosen(t) : sim::kIdle;
    out << ',' << (m == sim::kIdle ? 0 : m + 1) << '\n';
  };
  for (std::size_t t = 0; t <= trace.horizon(); t += stride) row(t);
  if (trace.horizon() % stride != 0) row(trace.horizon());
}

}  // namespace mwfair::cli
