#include <atomic>
#include <cstdlib>
#include <string_view>

#include "lfia/kernels.hpp"

namespace lfia::kernels {

namespace {

Isa initial_isa() {
  if (const char* env = std::getenv("LFIA_ISA"); env != nullptr && std::string_view(env) == "scalar")
    return Isa::Scalar;
  return detected_isa();
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

const char* to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

Isa detected_isa() {
#if defined(LFIA_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  if (__builtin_cpu_supports("avx2")) return Isa::Avx2;
#endif
  return Isa::Scalar;
}

Isa active_isa() { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (isa == Isa::Avx2 && detected_isa() != Isa::Avx2) isa = Isa::Scalar;
  active().store(isa, std::memory_order_relaxed);
}

void correlate(std::span<const double> h_re, std::span<const double> h_im, const PlaneView& cb,
               std::span<double> scores) {
#if defined(LFIA_HAVE_AVX2)
  if (active_isa() == Isa::Avx2) return correlate_avx2(h_re, h_im, cb, scores);
#endif
  correlate_scalar(h_re, h_im, cb, scores);
}

BestMatch best_match(std::span<const double> h_re, std::span<const double> h_im, const PlaneView& cb) {
#if defined(LFIA_HAVE_AVX2)
  if (active_isa() == Isa::Avx2) return best_match_avx2(h_re, h_im, cb);
#endif
  return best_match_scalar(h_re, h_im, cb);
}

}  // namespace lfia::kernels
