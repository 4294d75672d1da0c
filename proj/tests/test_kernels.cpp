#include <cmath>
#include <vector>

#include "doctest.h"

#include "lfia/codebook.hpp"
#include "lfia/kernels.hpp"

using namespace lfia;
using namespace lfia::kernels;

namespace {

struct Planes {
  std::vector<double> re, im;
  PlaneView view;
};

Planes random_planes(std::size_t entries, std::size_t count, std::size_t stride, Rng& rng) {
  Planes p;
  p.re.assign(entries * stride, 0.0);
  p.im.assign(entries * stride, 0.0);
  std::normal_distribution<double> n;
  for (std::size_t e = 0; e < entries; ++e)
    for (std::size_t l = 0; l < count; ++l) {
      p.re[e * stride + l] = n(rng);
      p.im[e * stride + l] = n(rng);
    }
  p.view = {p.re, p.im, entries, count, stride};
  return p;
}

// Straightforward complex arithmetic, independent of the kernels.
std::vector<double> reference_scores(const std::vector<double>& hr, const std::vector<double>& hi, const Planes& p) {
  std::vector<double> out(p.view.count);
  for (std::size_t l = 0; l < p.view.count; ++l) {
    std::complex<double> acc = 0.0;
    for (std::size_t e = 0; e < p.view.entries; ++e)
      acc += std::conj(std::complex<double>(hr[e], hi[e])) *
             std::complex<double>(p.re[e * p.view.stride + l], p.im[e * p.view.stride + l]);
    out[l] = std::norm(acc);
  }
  return out;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar kernel matches complex reference") {
  Rng rng(1);
  for (std::size_t entries : {1u, 2u, 6u, 24u}) {
    for (std::size_t count : {1u, 3u, 4u, 7u, 64u, 1001u}) {
      Planes p = random_planes(entries, count, count + 5, rng);
      std::vector<double> hr(entries), hi(entries);
      std::normal_distribution<double> n;
      for (std::size_t e = 0; e < entries; ++e) {
        hr[e] = n(rng);
        hi[e] = n(rng);
      }
      std::vector<double> s(count);
      correlate_scalar(hr, hi, p.view, s);
      const auto ref = reference_scores(hr, hi, p);
      for (std::size_t l = 0; l < count; ++l) CHECK(s[l] == doctest::Approx(ref[l]).epsilon(1e-12));
    }
  }
}

#if defined(LFIA_HAVE_AVX2)
TEST_CASE("avx2 kernel is bit-identical to scalar") {
  if (detected_isa() != Isa::Avx2) return;
  Rng rng(2);
  for (std::size_t entries : {1u, 2u, 6u, 12u, 24u}) {
    for (std::size_t count : {1u, 2u, 3u, 4u, 5u, 8u, 13u, 4096u, 4099u}) {
      Planes p = random_planes(entries, count, count + (count % 3), rng);
      std::vector<double> hr(entries), hi(entries);
      std::normal_distribution<double> n;
      for (std::size_t e = 0; e < entries; ++e) {
        hr[e] = n(rng);
        hi[e] = n(rng);
      }
      std::vector<double> a(count), b(count);
      correlate_scalar(hr, hi, p.view, a);
      correlate_avx2(hr, hi, p.view, b);
      bool same = true;
      for (std::size_t l = 0; l < count; ++l) same = same && a[l] == b[l];
      CHECK(same);
      const BestMatch x = best_match_scalar(hr, hi, p.view);
      const BestMatch y = best_match_avx2(hr, hi, p.view);
      CHECK(x.index == y.index);
      CHECK(x.score == y.score);
    }
  }
}

TEST_CASE("avx2 tie-break picks the lowest index") {
  if (detected_isa() != Isa::Avx2) return;
  const std::size_t count = 11;
  std::vector<double> re(2 * count, 0.0), im(2 * count, 0.0);
  for (std::size_t l = 0; l < count; ++l) re[l] = (l == 5 || l == 9 || l == 2) ? 1.0 : 0.5;
  PlaneView v{re, im, 2, count, count};
  std::vector<double> hr{1.0, 0.0}, hi{0.0, 0.0};
  CHECK(best_match_avx2(hr, hi, v).index == 2);
  CHECK(best_match_scalar(hr, hi, v).index == 2);
}
#endif

TEST_CASE("best match finds the maximum with lowest-index ties") {
  const std::size_t count = 9;
  std::vector<double> re(count, 0.1), im(count, 0.0);
  re[4] = -0.9;
  re[7] = 0.9;
  PlaneView v{re, im, 1, count, count};
  std::vector<double> hr{1.0}, hi{0.0};
  const BestMatch m = best_match_scalar(hr, hi, v);
  CHECK(m.index == 4);
  CHECK(m.score == doctest::Approx(0.81));
}

TEST_CASE("dispatch honors the forced isa") {
  const Isa before = active_isa();
  set_active_isa(Isa::Scalar);
  CHECK(active_isa() == Isa::Scalar);
  set_active_isa(Isa::Avx2);
  CHECK(active_isa() == detected_isa());
  set_active_isa(before);
}

TEST_CASE("quantize agrees across isas") {
  const BaseCodebook cb = gen_base_codebook(2, 3, 12, 77);
  Rng rng(3);
  const Isa before = active_isa();
  for (int t = 0; t < 50; ++t) {
    const CMatrix h = complex_normal_matrix(2, 3, rng);
    set_active_isa(Isa::Scalar);
    const auto a = quantize(h, cb);
    set_active_isa(Isa::Avx2);
    const auto b = quantize(h, cb);
    CHECK(a.index == b.index);
    CHECK(a.distortion == b.distortion);
  }
  set_active_isa(before);
}

}
