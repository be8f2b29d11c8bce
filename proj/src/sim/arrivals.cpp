#include <cmath>
#include <fstream>
#include <sstream>

#include "mwfair/sim.hpp"

namespace mwfair::sim {

namespace {

void check_rates(const Vec& r, const char* what) {
  if (r.empty()) throw ValidationError(std::string(what) + ": empty rate vector");
  for (double x : r)
    if (!std::isfinite(x) || x < 0.0) throw ValidationError(std::string(what) + ": rates must be finite and >= 0");
}

}  // namespace

ArrivalModel ArrivalModel::uniform(Vec rate, std::uint64_t seed, bool integer) {
  ArrivalModel m;
  m.kind = ArrivalKind::uniform;
  m.rate = std::move(rate);
  m.seed = seed;
  m.integer = integer;
  m.validate();
  return m;
}

ArrivalModel ArrivalModel::deterministic(Vec rate) {
  ArrivalModel m;
  m.kind = ArrivalKind::deterministic;
  m.rate = std::move(rate);
  m.validate();
  return m;
}

ArrivalModel ArrivalModel::from_trace(std::vector<Vec> rows) {
  ArrivalModel m;
  m.kind = ArrivalKind::trace;
  m.trace = std::move(rows);
  m.validate();
  return m;
}

ArrivalModel ArrivalModel::mode_switch(Vec stable, Vec unstable, std::size_t period, std::uint64_t seed,
                                       bool stable_first) {
  ArrivalModel m;
  m.kind = ArrivalKind::mode_switch;
  m.stable_rate = std::move(stable);
  m.unstable_rate = std::move(unstable);
  m.period = period;
  m.seed = seed;
  m.stable_first = stable_first;
  m.validate();
  return m;
}

void ArrivalModel::validate() const {
  switch (kind) {
    case ArrivalKind::uniform:
    case ArrivalKind::deterministic: check_rates(rate, "arrivals"); break;
    case ArrivalKind::trace:
      if (trace.empty()) throw ValidationError("arrival trace is empty");
      for (const auto& row : trace) {
        check_rates(row, "arrival trace");
        if (row.size() != trace.front().size()) throw ValidationError("arrival trace rows differ in width");
      }
      break;
    case ArrivalKind::mode_switch:
      check_rates(stable_rate, "stable mode");
      check_rates(unstable_rate, "unstable mode");
      if (stable_rate.size() != unstable_rate.size()) throw ValidationError("mode rates differ in dimension");
      if (period == 0) throw ValidationError("mode period must be positive");
      break;
  }
}

std::size_t ArrivalModel::dim() const {
  switch (kind) {
    case ArrivalKind::trace: return trace.front().size();
    case ArrivalKind::mode_switch: return stable_rate.size();
    default: return rate.size();
  }
}

bool ArrivalModel::stable_at(std::size_t t) const {
  if (kind != ArrivalKind::mode_switch) return false;
  const bool first_mode = (t / period) % 2 == 0;
  return first_mode == stable_first;
}

const Vec& ArrivalModel::rate_at(std::size_t t) const {
  switch (kind) {
    case ArrivalKind::trace:
      if (t >= trace.size()) throw std::out_of_range("arrival trace shorter than the horizon");
      return trace[t];
    case ArrivalKind::mode_switch: return stable_at(t) ? stable_rate : unstable_rate;
    default: return rate;
  }
}

Vec ArrivalModel::bound_at(std::size_t t) const {
  const Vec& r = rate_at(t);
  if (kind == ArrivalKind::trace || kind == ArrivalKind::deterministic) return r;
  Vec b(r.size());
  for (std::size_t q = 0; q < r.size(); ++q) b[q] = integer ? std::round(2.0 * r[q]) : 2.0 * r[q];
  return b;
}

std::vector<Vec> load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open arrival trace " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("arrival trace has no header");
  std::size_t width = 0;
  {
    std::stringstream hs(line);
    std::string cell;
    std::getline(hs, cell, ',');
    if (cell != "t") throw ValidationError("arrival trace header must start with 't'");
    while (std::getline(hs, cell, ',')) {
      ++width;
      if (cell != "a_" + std::to_string(width)) throw ValidationError("arrival trace header must be t,a_1,...,a_Q");
    }
  }
  if (width == 0) throw ValidationError("arrival trace has no queue columns");
  std::vector<Vec> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    std::getline(ls, cell, ',');
    Vec row;
    while (std::getline(ls, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0) throw ValidationError("arrival trace line " + std::to_string(lineno) + ": bad number");
      row.push_back(v);
    }
    if (row.size() != width)
      throw ValidationError("arrival trace line " + std::to_string(lineno) + ": expected " + std::to_string(width) +
                            " values");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError("arrival trace has no rows");
  return rows;
}

ArrivalStream::ArrivalStream(const ArrivalModel& model, std::uint64_t stream)
    : model_(&model), rng_(model.seed, stream) {}

void ArrivalStream::next(std::size_t t, Vec& out) {
  const Vec& r = model_->rate_at(t);
  out.resize(r.size());
  switch (model_->kind) {
    case ArrivalKind::deterministic:
    case ArrivalKind::trace: out = r; return;
    case ArrivalKind::uniform:
    case ArrivalKind::mode_switch:
      for (std::size_t q = 0; q < r.size(); ++q) {
        if (model_->integer) {
          const auto hi = static_cast<std::uint64_t>(std::llround(2.0 * r[q]));
          out[q] = static_cast<double>(rng_.below_inclusive(hi));
        } else {
          out[q] = 2.0 * r[q] * rng_.uniform01();
        }
      }
      return;
  }
}

}  // namespace mwfair::sim
