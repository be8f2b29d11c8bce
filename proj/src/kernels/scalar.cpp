#include "mwfair/kernels/kernels.hpp"

namespace mwfair::kernels::scalar {

LineMin line_min(const double* base, const double* dir, const double* weight, std::size_t dim, double step,
                 std::size_t count) {
  LineMin best{0.0, 0};
  for (std::size_t k = 0; k < count; ++k) {
    const double t = static_cast<double>(k) * step;
    double acc = 0.0;
    for (std::size_t q = 0; q < dim; ++q) {
      const double e = base[q] - t * dir[q];
      const double p = e > 0.0 ? e : 0.0;
      acc = acc + weight[q] * (p * p);
    }
    if (k == 0 || acc < best.value) best = LineMin{acc, k};
  }
  return best;
}

void scores(const double* service_queue_major, std::size_t n, std::size_t dim, const double* w, double* out) {
  for (std::size_t m = 0; m < n; ++m) {
    double acc = 0.0;
    for (std::size_t q = 0; q < dim; ++q) acc = acc + service_queue_major[q * n + m] * w[q];
    out[m] = acc;
  }
}

}  // namespace mwfair::kernels::scalar
