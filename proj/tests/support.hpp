#pragma once

#include <random>

#include "mwfair/model.hpp"

namespace mwfair::testing {

/// Deterministic generator for property tests.
using Engine = std::mt19937_64;

inline double uniform(Engine& g, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(g); }

inline int uniform_int(Engine& g, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(g); }

/// N distinct integer-valued service vectors in [0, hi]^Q, none all-zero.
inline ServiceSet random_services(Engine& g, std::size_t n, std::size_t dim, int hi = 5) {
  std::vector<Vec> rows;
  while (rows.size() < n) {
    Vec r(dim);
    double total = 0.0;
    for (double& x : r) {
      x = uniform_int(g, 0, hi);
      total += x;
    }
    if (total == 0.0) continue;
    bool dup = false;
    for (const auto& e : rows) dup = dup || e == r;
    if (!dup) rows.push_back(r);
  }
  return ServiceSet::from_rows(rows);
}

inline Vec random_positive(Engine& g, std::size_t dim, double lo, double hi) {
  Vec v(dim);
  for (double& x : v) x = uniform(g, lo, hi);
  return v;
}

}  // namespace mwfair::testing
