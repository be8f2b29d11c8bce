#include <atomic>
#include <cstdlib>

#include "mwfair/kernels/kernels.hpp"

namespace mwfair::kernels {

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

bool isa_supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::neon:
#if defined(__aarch64__)
      return true;  // mandatory in ARMv8-A
#else
      return false;
#endif
  }
  return false;
}

Isa detect_isa() noexcept {
  if (const char* force = std::getenv("MWFAIR_FORCE_SCALAR"); force != nullptr && *force != '\0' && *force != '0')
    return Isa::scalar;
  if (isa_supported(Isa::avx2)) return Isa::avx2;
  if (isa_supported(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

namespace {

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{detect_isa()};
  return isa;
}

}  // namespace

Isa active_isa() noexcept { return active().load(std::memory_order_relaxed); }

bool set_active_isa(Isa isa) noexcept {
  if (!isa_supported(isa)) return false;
  active().store(isa, std::memory_order_relaxed);
  return true;
}

LineMinFn line_min_for(Isa isa) noexcept {
  switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::avx2: return &avx2::line_min;
#endif
#if defined(__aarch64__)
    case Isa::neon: return &neon::line_min;
#endif
    default: return &scalar::line_min;
  }
}

ScoresFn scores_for(Isa isa) noexcept {
  switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::avx2: return &avx2::scores;
#endif
#if defined(__aarch64__)
    case Isa::neon: return &neon::scores;
#endif
    default: return &scalar::scores;
  }
}

LineMin line_min(std::span<const double> base, std::span<const double> dir, std::span<const double> weight,
                 double step, std::size_t count) {
  return line_min_for(active_isa())(base.data(), dir.data(), weight.data(), base.size(), step, count);
}

void scores(std::span<const double> service_queue_major, std::size_t n, std::span<const double> w,
            std::span<double> out) {
  scores_for(active_isa())(service_queue_major.data(), n, w.size(), w.data(), out.data());
}

}  // namespace mwfair::kernels
