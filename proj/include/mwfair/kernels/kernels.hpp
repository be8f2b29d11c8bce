#pragma once

// Data-parallel inner loops with a scalar reference implementation and
// SIMD variants picked at runtime. All variants evaluate the same
// expression tree in the same order, so results are bit-identical to the
// scalar reference (the build disables floating-point contraction).

#include <cstddef>
#include <span>
#include <string_view>

namespace mwfair::kernels {

enum class Isa { scalar, avx2, neon };

[[nodiscard]] std::string_view isa_name(Isa isa) noexcept;

/// Best ISA the running CPU supports, unless MWFAIR_FORCE_SCALAR is set.
[[nodiscard]] Isa detect_isa() noexcept;
/// ISA used by the dispatched entry points below.
[[nodiscard]] Isa active_isa() noexcept;
/// Overrides the dispatch choice (tests); returns false if unsupported here.
bool set_active_isa(Isa isa) noexcept;
[[nodiscard]] bool isa_supported(Isa isa) noexcept;

struct LineMin {
  double value;
  std::size_t index;
};

/// Weighted clipped quadratic along a lattice line:
///   f(k) = sum_q weight[q] * max(base[q] - (k * step) * dir[q], 0)^2,  k = 0..count-1.
/// Returns the minimum and the lowest k attaining it. count must be >= 1.
using LineMinFn = LineMin (*)(const double* base, const double* dir, const double* weight, std::size_t dim,
                              double step, std::size_t count);

/// out[m] = sum_q service[q * n + m] * w[q], accumulated with q ascending.
using ScoresFn = void (*)(const double* service_queue_major, std::size_t n, std::size_t dim, const double* w,
                          double* out);

namespace scalar {
LineMin line_min(const double* base, const double* dir, const double* weight, std::size_t dim, double step,
                 std::size_t count);
void scores(const double* service_queue_major, std::size_t n, std::size_t dim, const double* w, double* out);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
LineMin line_min(const double* base, const double* dir, const double* weight, std::size_t dim, double step,
                 std::size_t count);
void scores(const double* service_queue_major, std::size_t n, std::size_t dim, const double* w, double* out);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
LineMin line_min(const double* base, const double* dir, const double* weight, std::size_t dim, double step,
                 std::size_t count);
void scores(const double* service_queue_major, std::size_t n, std::size_t dim, const double* w, double* out);
}  // namespace neon
#endif

[[nodiscard]] LineMinFn line_min_for(Isa isa) noexcept;
[[nodiscard]] ScoresFn scores_for(Isa isa) noexcept;

// Dispatched entry points.
LineMin line_min(std::span<const double> base, std::span<const double> dir, std::span<const double> weight,
                 double step, std::size_t count);
void scores(std::span<const double> service_queue_major, std::size_t n, std::span<const double> w,
            std::span<double> out);

}  // namespace mwfair::kernels
