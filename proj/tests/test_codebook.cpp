#include <cmath>
#include <memory>

#include "doctest.h"
#include "oracles.hpp"

#include "lfia/codebook.hpp"
#include "lfia/topology.hpp"

using namespace lfia;

namespace {

CMatrix diag(std::initializer_list<double> v) {
  RVector d(static_cast<Eigen::Index>(v.size()));
  Eigen::Index n = 0;
  for (double x : v) d(n++) = x;
  return d.cast<Complex>().asDiagonal();
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::Parse;
}

std::shared_ptr<const BaseCodebook> base(int nr, int nt, int bits, std::uint64_t seed) {
  return std::make_shared<const BaseCodebook>(gen_base_codebook(nr, nt, bits, seed));
}

std::vector<double> distortions(const CodewordSet& words, std::size_t prefix, const CMatrix& phi_r,
                                const CMatrix& phi_t, int draws, std::uint64_t seed) {
  const CMatrix sr = matrix_sqrt_psd(phi_r), st = matrix_sqrt_psd(phi_t);
  Rng rng(seed);
  std::vector<double> out;
  for (int t = 0; t < draws; ++t) {
    const CMatrix h = sr * complex_normal_matrix(phi_r.rows(), phi_t.rows(), rng) * st;
    out.push_back(quantize(h, words, prefix).distortion);
  }
  return out;
}

}  // namespace

TEST_SUITE("codebook") {

TEST_CASE("base codebook construction") {
  const BaseCodebook one = gen_base_codebook(2, 3, 0, 1);
  CHECK(one.size() == 1);
  CHECK(one.word(0).norm() == doctest::Approx(1.0).epsilon(1e-12));

  const BaseCodebook cb = gen_base_codebook(2, 3, 4, 1);
  REQUIRE(cb.size() == 16);
  for (std::size_t a = 0; a < 16; ++a) {
    CHECK(std::abs(cb.word(a).norm() - 1.0) < 1e-12);
    for (std::size_t b = a + 1; b < 16; ++b) CHECK((cb.word(a) - cb.word(b)).norm() > 1e-6);
  }
}

TEST_CASE("base codebook is isotropic") {
  const BaseCodebook cb = gen_base_codebook(1, 2, 10, 3);
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < cb.size(); ++a) {
    const CVector wa = vec(cb.word(a));
    for (std::size_t b = a + 1; b < cb.size(); ++b) {
      sum += std::norm(wa.dot(vec(cb.word(b))));
      ++pairs;
    }
  }
  CHECK(sum / pairs == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("base codebooks are nested and deterministic") {
  const BaseCodebook small = gen_base_codebook(2, 3, 6, 42);
  const BaseCodebook large = gen_base_codebook(2, 3, 9, 42);
  const BaseCodebook again = gen_base_codebook(2, 3, 9, 42);
  for (std::size_t l = 0; l < small.size(); ++l) CHECK((small.word(l) - large.word(l)).norm() == 0.0);
  for (std::size_t l = 0; l < large.size(); ++l) CHECK((again.word(l) - large.word(l)).norm() == 0.0);
  CHECK((gen_base_codebook(2, 3, 6, 43).word(0) - small.word(0)).norm() > 0.0);
}

TEST_CASE("base codebook errors") {
  CHECK(kind_of([] { gen_base_codebook(2, 3, 25, 1); }) == ErrorKind::BudgetTooLarge);
  CHECK(kind_of([] { gen_base_codebook(2, 3, 11, 1, 10); }) == ErrorKind::BudgetTooLarge);
  CHECK(kind_of([] { gen_base_codebook(2, 3, -1, 1); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("identity transform returns the base words") {
  auto b = base(2, 3, 6, 5);
  const SpatialCodebook s = transform_codebook(b, CMatrix::Identity(2, 2), CMatrix::Identity(3, 3));
  for (std::size_t l = 0; l < b->size(); ++l) CHECK((s.word(l) - b->word(l)).norm() < 1e-14);
}

TEST_CASE("toy correlation transform direction") {
  auto b = base(2, 3, 6, 6);
  const SpatialCodebook s = transform_codebook(b, CMatrix::Identity(2, 2), diag({2.8, 0.1, 0.1}));
  RVector scale(6);
  scale << 2.8, 2.8, 0.1, 0.1, 0.1, 0.1;
  for (std::size_t l = 0; l < b->size(); ++l) {
    CVector expect = scale.cwiseSqrt().cast<Complex>().asDiagonal() * vec(b->word(l));
    expect.normalize();
    CHECK((vec(s.word(l)) - expect).norm() < 1e-12);
    CHECK(std::abs(s.word(l).norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("rank-one transform annihilates the null space") {
  auto b = base(2, 3, 5, 7);
  const SpatialCodebook s = transform_codebook(b, CMatrix::Identity(2, 2), diag({3, 0, 0}));
  for (std::size_t l = 0; l < s.size(); ++l) {
    CHECK(s.word(l).col(1).norm() == 0.0);
    CHECK(s.word(l).col(2).norm() == 0.0);
    CHECK(std::abs(s.word(l).norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("transformed words lie in the correlation ranges") {
  Rng rng(8);
  const CMatrix pr = oracle::random_psd(3, rng, 2);
  const CMatrix pt = oracle::random_psd(4, rng, 3);
  auto b = base(3, 4, 6, 9);
  const SpatialCodebook s = transform_codebook(b, pr, pt);
  const CMatrix qr = CMatrix::Identity(3, 3) - range_projector(pr);
  const CMatrix qt = CMatrix::Identity(4, 4) - range_projector(pt);
  for (std::size_t l = 0; l < s.size(); ++l) {
    CHECK((qr * s.word(l)).norm() < 1e-10);
    CHECK((s.word(l) * qt).norm() < 1e-10);
  }
}

TEST_CASE("transform dimension mismatch") {
  auto b = base(2, 3, 2, 1);
  CHECK(kind_of([&] { transform_codebook(b, CMatrix::Identity(3, 3), CMatrix::Identity(3, 3)); }) ==
        ErrorKind::DimensionMismatch);
}

TEST_CASE("quantize exact codeword") {
  const BaseCodebook cb = gen_base_codebook(2, 3, 6, 10);
  const auto r = quantize(5.0 * cb.word(17), cb);
  CHECK(r.index == 17);
  CHECK(r.distortion < 1e-24);
  CHECK(std::abs(r.alpha - Complex(5.0, 0.0)) < 1e-12);
}

TEST_CASE("quantize scale invariance and invariants") {
  const BaseCodebook cb = gen_base_codebook(2, 3, 8, 11);
  Rng rng(12);
  for (int t = 0; t < 200; ++t) {
    const CMatrix h = complex_normal_matrix(2, 3, rng);
    const auto r = quantize(h, cb);
    CHECK(quantize(2.0 * h, cb).index == r.index);
    CHECK(quantize(0.01 * h, cb).index == r.index);
    CHECK(std::abs(vec(r.delta_h).dot(vec(r.h_hat))) < 1e-10);
    CHECK(std::abs(h.squaredNorm() - std::norm(r.alpha) - r.distortion) < 1e-8);
    // Independent brute force over the words.
    double best = -1.0;
    std::size_t arg = 0;
    for (std::size_t l = 0; l < cb.size(); ++l) {
      const double s = std::abs(vec(cb.word(l)).dot(vec(h)));
      if (s > best) {
        best = s;
        arg = l;
      }
    }
    CHECK(r.index == arg);
  }
}

TEST_CASE("quantize ties go to the lowest index") {
  auto b = std::make_shared<BaseCodebook>(gen_base_codebook(1, 2, 2, 1));
  CMatrix w(1, 2);
  w << Complex(1, 0), Complex(0, 0);
  b->words.set_word(1, w);
  b->words.set_word(3, w);
  CHECK(quantize(w, *b).index == 1);
}

TEST_CASE("quantize errors") {
  const BaseCodebook cb = gen_base_codebook(2, 3, 2, 1);
  CHECK(kind_of([&] { quantize(CMatrix::Zero(2, 3), cb); }) == ErrorKind::ZeroInput);
  CHECK(kind_of([&] { quantize(CMatrix::Ones(3, 2), cb); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("mean distortion follows the exact random codebook law") {
  // Fresh codebook per draw averages over the codebook ensemble.
  for (int bits : {4, 8, 10}) {
    std::vector<double> d;
    Rng rng(13);
    for (int t = 0; t < 4000; ++t) {
      const BaseCodebook cb = gen_base_codebook(2, 3, bits, 1000 + t);
      d.push_back(quantize(complex_normal_matrix(2, 3, rng), cb).distortion);
    }
    const double expect = 6.0 * oracle::rvq_mean_fraction(6, bits);
    CHECK(std::abs(oracle::mean(d) - expect) < 3.0 * oracle::std_error(d));
  }
}

TEST_CASE("iid 2x3 at 10 bits against the high-resolution bound" * doctest::may_fail()) {
  // The bound equals the quantization-cell lower bound, which random
  // codebooks exceed by about 10 percent.
  const BaseCodebook cb = gen_base_codebook(2, 3, 10, 14);
  const auto d = distortions(cb.words, cb.size(), CMatrix::Identity(2, 2), CMatrix::Identity(3, 3), 10000, 15);
  CHECK(oracle::mean(d) >= 0.5 * 1.25);
  CHECK(oracle::mean(d) <= 1.25);
}

TEST_CASE("distortion non-increasing along nested prefixes") {
  const BaseCodebook cb = gen_base_codebook(2, 3, 12, 16);
  double prev = 1e9;
  for (int bits = 0; bits <= 12; bits += 2) {
    const auto d = distortions(cb.words, std::size_t{1} << bits, CMatrix::Identity(2, 2), CMatrix::Identity(3, 3),
                               2000, 17);
    const double m = oracle::mean(d);
    CHECK(m <= prev);
    prev = m;
  }
}

TEST_CASE("spatial codebook beats the base codebook on correlated channels") {
  auto b = base(2, 3, 10, 18);
  const CMatrix pr = CMatrix::Identity(2, 2), pt = diag({2.8, 0.1, 0.1});
  const SpatialCodebook s = transform_codebook(b, pr, pt);
  const auto ds = distortions(s.words, s.size(), pr, pt, 10000, 19);
  const auto db = distortions(b->words, b->size(), pr, pt, 10000, 19);
  CHECK(oracle::mean(ds) < oracle::mean(db));
}

TEST_CASE("beta for identity correlations") {
  const BetaEstimate b23 = distortion_coefficient_beta(CMatrix::Identity(2, 2), CMatrix::Identity(3, 3), 100000, 1);
  CHECK(std::abs(b23.value - 5.0) <= 3.0 * b23.std_error + 1e-9);
  CHECK(b23.m_r == 2);
  CHECK(b23.m_t == 3);
  const BetaEstimate b22 = distortion_coefficient_beta(CMatrix::Identity(2, 2), CMatrix::Identity(2, 2), 100000, 2);
  CHECK(std::abs(b22.value - 3.0) <= 3.0 * b22.std_error + 1e-9);
}

TEST_CASE("beta reproducible across seeds") {
  const CMatrix pt = diag({2.8, 0.1, 0.1});
  const BetaEstimate a = distortion_coefficient_beta(CMatrix::Identity(2, 2), pt, 100000, 3);
  const BetaEstimate b = distortion_coefficient_beta(CMatrix::Identity(2, 2), pt, 100000, 4);
  const double joint = std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
  CHECK(std::abs(a.value - b.value) <= 3.0 * joint);
  CHECK(a.value > 0.0);
  const BetaEstimate c = distortion_coefficient_beta(CMatrix::Identity(2, 2), pt, 100000, 3);
  CHECK(c.value == a.value);
}

TEST_CASE("beta errors") {
  CHECK(kind_of([] { distortion_coefficient_beta(diag({2, 0}), diag({3, 0, 0}), 10000, 1); }) == ErrorKind::RankOne);
  CHECK(kind_of([] { distortion_coefficient_beta(CMatrix::Identity(2, 2), CMatrix::Identity(3, 3), 100, 1); }) ==
        ErrorKind::InvalidArgument);
}

TEST_CASE("distortion bound arithmetic") {
  CHECK(distortion_bound(5.0, 2, 3, 5) == doctest::Approx(2.5));
  CHECK(distortion_bound(5.0, 2, 3, 0) == doctest::Approx(5.0));
  CHECK(distortion_bound(5.0, 2, 3, 15) == doctest::Approx(0.625));
  CHECK(kind_of([] { distortion_bound(1.0, 1, 1, 3); }) == ErrorKind::RankOne);
}

TEST_CASE("high-resolution quantizer matches exhaustive search on isotropic codebooks") {
  const HighResolutionQuantizer hr(2, 3);
  for (int bits : {12, 14}) {
    std::vector<double> ex, hi;
    Rng rng(20), q(21);
    for (int t = 0; t < 1500; ++t) {
      const BaseCodebook cb = gen_base_codebook(2, 3, bits, 5000 + t);
      const CMatrix h = complex_normal_matrix(2, 3, rng);
      ex.push_back(quantize(h, cb).distortion);
      hi.push_back(hr.quantize(h, bits, q).distortion);
    }
    const double se = std::hypot(oracle::std_error(ex), oracle::std_error(hi));
    CHECK(std::abs(oracle::mean(ex) - oracle::mean(hi)) < 3.0 * se);
    const double expect = 6.0 * oracle::rvq_mean_fraction(6, bits);
    CHECK(std::abs(oracle::mean(hi) - expect) < 3.0 * oracle::std_error(hi));
  }
}

TEST_CASE("high-resolution quantizer tracks exhaustive search on spatial codebooks") {
  const CMatrix pr = CMatrix::Identity(2, 2), pt = diag({2.8, 0.1, 0.1});
  const HighResolutionQuantizer hr(pr, pt);
  CHECK(hr.support_dim() == 6);
  const CMatrix st = matrix_sqrt_psd(pt);
  std::vector<double> ex, hi;
  Rng rng(22), q(23);
  for (int t = 0; t < 1500; ++t) {
    auto b = base(2, 3, 12, 7000 + t);
    const SpatialCodebook s = transform_codebook(b, pr, pt);
    const CMatrix h = complex_normal_matrix(2, 3, rng) * st;
    ex.push_back(quantize(h, s).distortion);
    hi.push_back(hr.quantize(h, 12, q).distortion);
  }
  CHECK(oracle::mean(hi) == doctest::Approx(oracle::mean(ex)).epsilon(0.1));
}

TEST_CASE("high-resolution quantizer invariants") {
  Rng rng(24);
  const CMatrix pr = oracle::random_psd(2, rng, 1);
  const CMatrix pt = oracle::random_psd(3, rng, 2);
  const HighResolutionQuantizer hr(pr, pt);
  CHECK(hr.support_dim() == 2);
  const CMatrix sr = matrix_sqrt_psd(pr), st = matrix_sqrt_psd(pt);
  const CMatrix qr = CMatrix::Identity(2, 2) - range_projector(pr);
  for (int t = 0; t < 100; ++t) {
    const CMatrix h = sr * complex_normal_matrix(2, 3, rng) * st;
    const auto r = hr.quantize(h, 20, rng);
    CHECK(std::abs(r.h_hat.norm() - 1.0) < 1e-12);
    CHECK((qr * r.h_hat).norm() < 1e-10);
    CHECK(std::abs(vec(r.delta_h).dot(vec(r.h_hat))) < 1e-10);
    CHECK(r.distortion <= h.squaredNorm() + 1e-12);
  }
  const HighResolutionQuantizer one(CMatrix::Identity(1, 1), CMatrix::Identity(1, 1));
  CMatrix h(1, 1);
  h << Complex(0.3, -2.0);
  CHECK(one.quantize(h, 0, rng).distortion < 1e-24);
}

TEST_CASE("codebook json round trip") {
  auto b = base(2, 3, 4, 25);
  const SpatialCodebook s = transform_codebook(b, CMatrix::Identity(2, 2), exponential_correlation(3, {0.5, 0.2}));
  const SpatialCodebook back = codebook_from_json(nlohmann::json::parse(to_json(s).dump()));
  REQUIRE(back.size() == s.size());
  for (std::size_t l = 0; l < s.size(); ++l) CHECK((back.word(l) - s.word(l)).cwiseAbs().maxCoeff() <= 1e-15);
  const SpatialCodebook plain = codebook_from_json(nlohmann::json::parse(to_json(*b).dump()));
  for (std::size_t l = 0; l < b->size(); ++l) CHECK((plain.word(l) - b->word(l)).cwiseAbs().maxCoeff() <= 1e-15);
  auto bad = to_json(*b);
  bad["transform"] = "warp";
  CHECK(kind_of([&] { codebook_from_json(bad); }) == ErrorKind::Parse);
}

}
