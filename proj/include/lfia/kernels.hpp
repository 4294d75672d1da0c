#pragma once

#include <cstddef>
#include <span>

namespace lfia::kernels {

enum class Isa { Scalar, Avx2 };

const char* to_string(Isa isa);

/// Codewords stored plane-by-plane: entry e of codeword l lives at
/// re[e * stride + l] / im[e * stride + l].
struct PlaneView {
  std::span<const double> re;
  std::span<const double> im;
  std::size_t entries = 0;
  std::size_t count = 0;
  std::size_t stride = 0;
};

struct BestMatch {
  std::size_t index = 0;
  double score = -1.0;
};

// Scores are |sum_e conj(h_e) w_e|^2. Both variants accumulate in the same
// order without fused multiply-add, so results agree bit for bit.

void correlate_scalar(std::span<const double> h_re, std::span<const double> h_im, const PlaneView& cb,
                      std::span<double> scores);
BestMatch best_match_scalar(std::span<const double> h_re, std::span<const double> h_im, const PlaneView& cb);

#if defined(LFIA_HAVE_AVX2)
void correlate_avx2(std::span<const double> h_re, std::span<const double> h_im, const PlaneView& cb,
                    std::span<double> scores);
BestMatch best_match_avx2(std::span<const double> h_re, std::span<const double> h_im, const PlaneView& cb);
#endif

/// Best instruction set supported by this CPU and build.
Isa detected_isa();
/// Variant used by the dispatching entry points. Defaults to detected_isa();
/// LFIA_ISA=scalar in the environment forces the reference path.
Isa active_isa();
void set_active_isa(Isa isa);

void correlate(std::span<const double> h_re, std::span<const double> h_im, const PlaneView& cb,
               std::span<double> scores);
/// Highest score, lowest index among ties.
BestMatch best_match(std::span<const double> h_re, std::span<const double> h_im, const PlaneView& cb);

}  // namespace lfia::kernels
