#include <immintrin.h>

#include "lfia/kernels.hpp"

namespace lfia::kernels {

namespace {

// Four codewords per register, one accumulator pair per lane.
inline __m256d score4(std::span<const double> h_re, std::span<const double> h_im, const PlaneView& cb,
                      std::size_t l) {
  __m256d acc_re = _mm256_setzero_pd();
  __m256d acc_im = _mm256_setzero_pd();
  for (std::size_t e = 0; e < cb.entries; ++e) {
    const __m256d hr = _mm256_set1_pd(h_re[e]);
    const __m256d hi = _mm256_set1_pd(h_im[e]);
    const __m256d wr = _mm256_loadu_pd(cb.re.data() + e * cb.stride + l);
    const __m256d wi = _mm256_loadu_pd(cb.im.data() + e * cb.stride + l);
    acc_re = _mm256_add_pd(acc_re, _mm256_mul_pd(hr, wr));
    acc_re = _mm256_add_pd(acc_re, _mm256_mul_pd(hi, wi));
    acc_im = _mm256_add_pd(acc_im, _mm256_mul_pd(hr, wi));
    acc_im = _mm256_sub_pd(acc_im, _mm256_mul_pd(hi, wr));
  }
  return _mm256_add_pd(_mm256_mul_pd(acc_re, acc_re), _mm256_mul_pd(acc_im, acc_im));
}

}  // namespace

void correlate_avx2(std::span<const double> h_re, std::span<const double> h_im, const PlaneView& cb,
                    std::span<double> scores) {
  std::size_t l = 0;
  for (; l + 4 <= cb.count; l += 4) _mm256_storeu_pd(scores.data() + l, score4(h_re, h_im, cb, l));
  if (l < cb.count) {
    const PlaneView tail{cb.re.subspan(l), cb.im.subspan(l), cb.entries, cb.count - l, cb.stride};
    correlate_scalar(h_re, h_im, tail, scores.subspan(l));
  }
}

BestMatch best_match_avx2(std::span<const double> h_re, std::span<const double> h_im, const PlaneView& cb) {
  __m256d best = _mm256_set1_pd(-1.0);
  __m256d best_idx = _mm256_setzero_pd();
  __m256d idx = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
  const __m256d step = _mm256_set1_pd(4.0);
  std::size_t l = 0;
  for (; l + 4 <= cb.count; l += 4) {
    const __m256d s = score4(h_re, h_im, cb, l);
    const __m256d better = _mm256_cmp_pd(s, best, _CMP_GT_OQ);
    best = _mm256_blendv_pd(best, s, better);
    best_idx = _mm256_blendv_pd(best_idx, idx, better);
    idx = _mm256_add_pd(idx, step);
  }
  alignas(32) double lane_score[4];
  alignas(32) double lane_idx[4];
  _mm256_store_pd(lane_score, best);
  _mm256_store_pd(lane_idx, best_idx);

  BestMatch out;
  for (int k = 0; k < 4; ++k) {
    const auto i = static_cast<std::size_t>(lane_idx[k]);
    if (lane_score[k] > out.score || (lane_score[k] == out.score && i < out.index)) {
      out.score = lane_score[k];
      out.index = i;
    }
  }
  for (; l < cb.count; ++l) {
    const PlaneView one{cb.re.subspan(l), cb.im.subspan(l), cb.entries, 1, cb.stride};
    const BestMatch tail = best_match_scalar(h_re, h_im, one);
    if (tail.score > out.score) {
      out.score = tail.score;
      out.index = l;
    }
  }
  return out;
}

}  // namespace lfia::kernels
