#include "lfia/kernels.hpp"

namespace lfia::kernels {

namespace {

inline double score_at(std::span<const double> h_re, std::span<const double> h_im, const PlaneView& cb,
                       std::size_t l) {
  double acc_re = 0.0;
  double acc_im = 0.0;
  for (std::size_t e = 0; e < cb.entries; ++e) {
    const double wr = cb.re[e * cb.stride + l];
    const double wi = cb.im[e * cb.stride + l];
    acc_re = acc_re + h_re[e] * wr;
    acc_re = acc_re + h_im[e] * wi;
    acc_im = acc_im + h_re[e] * wi;
    acc_im = acc_im - h_im[e] * wr;
  }
  return acc_re * acc_re + acc_im * acc_im;
}

}  // namespace

void correlate_scalar(std::span<const double> h_re, std::span<const double> h_im, const PlaneView& cb,
                      std::span<double> scores) {
  for (std::size_t l = 0; l < cb.count; ++l) scores[l] = score_at(h_re, h_im, cb, l);
}

BestMatch best_match_scalar(std::span<const double> h_re, std::span<const double> h_im, const PlaneView& cb) {
  BestMatch best;
  for (std::size_t l = 0; l < cb.count; ++l) {
    const double s = score_at(h_re, h_im, cb, l);
    if (s > best.score) {
      best.score = s;
      best.index = l;
    }
  }
  return best;
}

}  // namespace lfia::kernels
