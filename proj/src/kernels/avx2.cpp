// Compiled with -mavx2 (and without FMA) only for this translation unit;
// callers go through the dispatcher, which checks CPU support first.

#include "mwfair/kernels/kernels.hpp"

#include <immintrin.h>

#include <limits>

namespace mwfair::kernels::avx2 {

LineMin line_min(const double* base, const double* dir, const double* weight, std::size_t dim, double step,
                 std::size_t count) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d vstep = _mm256_set1_pd(step);
  const __m256d four = _mm256_set1_pd(4.0);
  __m256d kv = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);
  __m256d best_v = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  __m256d best_k = zero;

  std::size_t k = 0;
  for (; k + 4 <= count; k += 4) {
    const __m256d t = _mm256_mul_pd(kv, vstep);
    __m256d acc = zero;
    for (std::size_t q = 0; q < dim; ++q) {
      const __m256d e = _mm256_sub_pd(_mm256_set1_pd(base[q]), _mm256_mul_pd(t, _mm256_set1_pd(dir[q])));
      const __m256d p = _mm256_max_pd(e, zero);
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(weight[q]), _mm256_mul_pd(p, p)));
    }
    const __m256d better = _mm256_cmp_pd(acc, best_v, _CMP_LT_OQ);
    best_v = _mm256_blendv_pd(best_v, acc, better);
    best_k = _mm256_blendv_pd(best_k, kv, better);
    kv = _mm256_add_pd(kv, four);
  }

  alignas(32) double lane_v[4];
  alignas(32) double lane_k[4];
  _mm256_store_pd(lane_v, best_v);
  _mm256_store_pd(lane_k, best_k);

  LineMin best{std::numeric_limits<double>::infinity(), 0};
  bool have = false;
  if (k > 0) {
    for (int i = 0; i < 4; ++i) {
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
  for (; m + 4 <= n; m += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t q = 0; q < dim; ++q)
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(service_queue_major + q * n + m), _mm256_set1_pd(w[q])));
    _mm256_storeu_pd(out + m, acc);
  }
  for (; m < n; ++m) {
    double acc = 0.0;
    for (std::size_t q = 0; q < dim; ++q) acc = acc + service_queue_major[q * n + m] * w[q];
    out[m] = acc;
  }
}

}  // namespace mwfair::kernels::avx2
