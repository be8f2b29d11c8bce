#include "mwfair/kernels/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <limits>

namespace mwfair::kernels::neon {

LineMin line_min(const double* base, const double* dir, const double* weight, std::size_t dim, double step,
                 std::size_t count) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  const float64x2_t vstep = vdupq_n_f64(step);
  const float64x2_t two = vdupq_n_f64(2.0);
  const double k_init[2] = {0.0, 1.0};
  float64x2_t kv = vld1q_f64(k_init);
  float64x2_t best_v = vdupq_n_f64(std::numeric_limits<double>::infinity());
  float64x2_t best_k = zero;

  std::size_t k = 0;
  for (; k + 2 <= count; k += 2) {
    const float64x2_t t = vmulq_f64(kv, vstep);
    float64x2_t acc = zero;
    for (std::size_t q = 0; q < dim; ++q) {
      // Separate mul/sub (no vfms) to match the scalar rounding sequence.
      const float64x2_t e = vsubq_f64(vdupq_n_f64(base[q]), vmulq_f64(t, vdupq_n_f64(dir[q])));
      const float64x2_t p = vbslq_f64(vcgtq_f64(e, zero), e, zero);
      acc = vaddq_f64(acc, vmulq_f64(vdupq_n_f64(weight[q]), vmulq_f64(p, p)));
    }
    const uint64x2_t better = vcltq_f64(acc, best_v);
    best_v = vbslq_f64(better, acc, best_v);
    best_k = vbslq_f64(better, kv, best_k);
    kv = vaddq_f64(kv, two);
  }

  double lane_v[2];
  double lane_k[2];
  vst1q_f64(lane_v, best_v);
  vst1q_f64(lane_k, best_k);

  LineMin best{std::numeric_limits<double>::infinity(), 0};
  bool have = false;
  if (k > 0) {
    for (int i = 0; i < 2; ++i) {
      const auto idx = static_cast<std::size_t>(lane_k[i]);
      if (!have || lane_v[i] < best.value || (lane_v[i] == best.value && idx < best.index)) {
        best = LineMin{lane_v[i], idx};
        have = true;
      }
    }
  }
  for (; k < count; ++k) {
    const double t = static_cast<double>(k) * step;
    double acc = 0.0;
    for (std::size_t q = 0; q < dim; ++q) {
      const double e = base[q] - t * dir[q];
      const double p = e > 0.0 ? e : 0.0;
      acc = acc + weight[q] * (p * p);
    }
    if (!have || acc < best.value) {
      best = LineMin{acc, k};
      have = true;
    }
  }
  return best;
}

void scores(const double* service_queue_major, std::size_t n, std::size_t dim, const double* w, double* out) {
  std::size_t m = 0;
  for (; m + 2 <= n; m += 2) {
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::size_t q = 0; q < dim; ++q)
      acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(service_queue_major + q * n + m), vdupq_n_f64(w[q])));
    vst1q_f64(out + m, acc);
  }
  for (; m < n; ++m) {
    double acc = 0.0;
    for (std::size_t q = 0; q < dim; ++q) acc = acc + service_queue_major[q * n + m] * w[q];
    out[m] = acc;
  }
}

}  // namespace mwfair::kernels::neon

#endif
