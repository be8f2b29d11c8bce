#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>

#include <doctest.h>

#include "mwfair/kernels/kernels.hpp"
#include "support.hpp"

using namespace mwfair;
using namespace mwfair::kernels;

namespace {

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

// Independent reference: direct evaluation of every lattice point.
LineMin brute_line(const Vec& base, const Vec& dir, const Vec& w, double step, std::size_t count) {
  LineMin best{INFINITY, 0};
  for (std::size_t k = 0; k < count; ++k) {
    double f = 0.0;
    for (std::size_t q = 0; q < base.size(); ++q) {
      const double e = std::max(base[q] - static_cast<double>(k) * step * dir[q], 0.0);
      f += w[q] * e * e;
    }
    if (f < best.value) best = {f, k};
  }
  return best;
}

std::vector<Isa> simd_variants() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::avx2, Isa::neon})
    if (isa_supported(isa)) out.push_back(isa);
  return out;
}

struct IsaGuard {
  Isa saved = active_isa();
  ~IsaGuard() { set_active_isa(saved); }
};

}  // namespace

TEST_CASE("scalar line_min matches direct evaluation") {
  testing::Engine g(3);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t dim = static_cast<std::size_t>(testing::uniform_int(g, 1, 5));
    const std::size_t count = static_cast<std::size_t>(testing::uniform_int(g, 1, 60));
    const Vec base = testing::random_positive(g, dim, -1.0, 5.0);
    const Vec dir = testing::random_positive(g, dim, 0.0, 5.0);
    const Vec w = testing::random_positive(g, dim, 0.1, 3.0);
    const double step = 1.0 / static_cast<double>(count);
    const auto ref = brute_line(base, dir, w, step, count);
    const auto got = scalar::line_min(base.data(), dir.data(), w.data(), dim, step, count);
    CHECK(got.value == doctest::Approx(ref.value).epsilon(1e-12));
    // The argmin may differ only between near-equal values.
    const auto at_ref = scalar::line_min(base.data(), dir.data(), w.data(), dim, step, ref.index + 1);
    CHECK(at_ref.value <= ref.value * (1.0 + 1e-12) + 1e-300);
  }
}

TEST_CASE("line_min returns the lowest index on ties") {
  // Base entirely below zero along the line: f == 0 for every k.
  const Vec base{-1.0, -2.0}, dir{1.0, 1.0}, w{1.0, 1.0};
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
    if (!isa_supported(isa)) continue;
    const auto r = line_min_for(isa)(base.data(), dir.data(), w.data(), 2, 0.1, 37);
    CHECK(r.value == 0.0);
    CHECK(r.index == 0);
  }
  // Flat minimum reached at k = 5 and after: lowest index wins.
  const Vec b2{0.5}, d2{0.1}, w2{1.0};
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
    if (!isa_supported(isa)) continue;
    const auto r = line_min_for(isa)(b2.data(), d2.data(), w2.data(), 1, 1.0, 23);
    CHECK(r.index == 5);
    CHECK(r.value == 0.0);
  }
}

TEST_CASE("scalar scores match a direct dot product") {
  const Vec qm{4, 3, 1, 0, 1, 2};  // S = {(4,0),(3,1),(1,2)} queue-major
  const Vec w{1.0, 2.0};
  Vec out(3);
  scalar::scores(qm.data(), 3, 2, w.data(), out.data());
  CHECK(out == Vec{4.0, 5.0, 5.0});
}

TEST_CASE("SIMD variants are bit-identical to the scalar reference") {
  const auto variants = simd_variants();
  if (variants.empty()) {
    MESSAGE("no SIMD variant on this CPU; nothing to compare");
    return;
  }
  testing::Engine g(5);
  for (Isa isa : variants) {
    CAPTURE(isa_name(isa));
    const auto line = line_min_for(isa);
    const auto sc = scores_for(isa);
    for (int trial = 0; trial < 2000; ++trial) {
      const std::size_t dim = static_cast<std::size_t>(testing::uniform_int(g, 1, 6));
      const std::size_t count = static_cast<std::size_t>(testing::uniform_int(g, 1, 41));
      const Vec base = testing::random_positive(g, dim, -3.0, 6.0);
      const Vec dir = testing::random_positive(g, dim, -1.0, 6.0);
      const Vec w = testing::random_positive(g, dim, 0.01, 9.0);
      const double step = testing::uniform(g, 1e-3, 0.5);
      const auto a = scalar::line_min(base.data(), dir.data(), w.data(), dim, step, count);
      const auto b = line(base.data(), dir.data(), w.data(), dim, step, count);
      CHECK(same_bits(a.value, b.value));
      CHECK(a.index == b.index);

      const std::size_t n = static_cast<std::size_t>(testing::uniform_int(g, 1, 19));
      const Vec qm = testing::random_positive(g, n * dim, 0.0, 7.0);
      Vec o1(n), o2(n);
      scalar::scores(qm.data(), n, dim, w.data(), o1.data());
      sc(qm.data(), n, dim, w.data(), o2.data());
      for (std::size_t m = 0; m < n; ++m) CHECK(same_bits(o1[m], o2[m]));
    }
  }
}

TEST_CASE("dispatch can be switched and restored") {
  IsaGuard guard;
  CHECK(set_active_isa(Isa::scalar));
  CHECK(active_isa() == Isa::scalar);
  const Vec qm{1, 2, 3, 4};
  const Vec w{0.5, 0.25};
  Vec out(2);
  scores(qm, 2, w, out);
  CHECK(out == Vec{1.25, 2.0});
  const auto r = line_min(Vec{1.0}, Vec{1.0}, Vec{1.0}, 0.25, 9);
  CHECK(r.index == 4);
  for (Isa isa : simd_variants()) {
    CHECK(set_active_isa(isa));
    CHECK(active_isa() == isa);
  }
  if (!isa_supported(Isa::neon)) CHECK_FALSE(set_active_isa(Isa::neon));
}

TEST_CASE("forcing the scalar path through the environment") {
  ::setenv("MWFAIR_FORCE_SCALAR", "1", 1);
  CHECK(detect_isa() == Isa::scalar);
  ::setenv("MWFAIR_FORCE_SCALAR", "0", 1);
  if (isa_supported(Isa::avx2)) CHECK(detect_isa() == Isa::avx2);
  ::unsetenv("MWFAIR_FORCE_SCALAR");
  CHECK(isa_name(Isa::scalar) == "scalar");
}
