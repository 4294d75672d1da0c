#include "lfia/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include "lfia/topology.hpp"

namespace lfia {

namespace {

constexpr double kDegenerateNorm = 1e-12;

CMatrix random_unit_word(int nr, int nt, Rng& rng) {
  for (;;) {
    CMatrix s = complex_normal_matrix(nr, nt, rng);
    const double n = s.norm();
    if (n > 0.0) return s / n;
  }
}

}  // namespace

CodewordSet::CodewordSet(int nr, int nt, std::size_t count)
    : nr_(nr), nt_(nt), count_(count), stride_((count + 3) / 4 * 4) {
  re_.assign(entries() * stride_, 0.0);
  im_.assign(entries() * stride_, 0.0);
}

CMatrix CodewordSet::word(std::size_t l) const {
  CMatrix w(nr_, nt_);
  for (std::size_t e = 0; e < entries(); ++e) w.data()[e] = Complex(re_[e * stride_ + l], im_[e * stride_ + l]);
  return w;
}

void CodewordSet::set_word(std::size_t l, const CMatrix& w) { set_word(l, w.data(), 1.0); }

void CodewordSet::set_word(std::size_t l, const Complex* w, double scale) {
  for (std::size_t e = 0; e < entries(); ++e) {
    re_[e * stride_ + l] = scale * w[e].real();
    im_[e * stride_ + l] = scale * w[e].imag();
  }
}

void CodewordSet::get_word(std::size_t l, Complex* out) const {
  for (std::size_t e = 0; e < entries(); ++e) out[e] = Complex(re_[e * stride_ + l], im_[e * stride_ + l]);
}

kernels::PlaneView CodewordSet::view(std::size_t prefix) const {
  if (prefix > count_) throw Error(ErrorKind::InvalidArgument, "prefix longer than the codebook");
  return {re_, im_, entries(), prefix, stride_};
}

BaseCodebook gen_base_codebook(int nr, int nt, int bits, std::uint64_t seed, int max_bits) {
  if (nr < 1 || nt < 1) throw Error(ErrorKind::InvalidArgument, "codebook dimensions must be positive");
  if (bits < 0) throw Error(ErrorKind::InvalidArgument, "bits must be >= 0");
  if (bits > max_bits || bits > 62)
    throw Error(ErrorKind::BudgetTooLarge, std::to_string(bits) + " bits exceeds the codebook cap of " +
                                               std::to_string(max_bits));
  const std::size_t count = std::size_t{1} << bits;
  BaseCodebook cb{bits, seed, CodewordSet(nr, nt, count)};
  Rng rng(seed);
  std::vector<Complex> w(static_cast<std::size_t>(nr) * nt);
  for (std::size_t l = 0; l < count; ++l) {
    double n2 = 0.0;
    while (n2 == 0.0) {
      n2 = 0.0;
      for (Complex& x : w) {
        x = complex_normal(rng);
        n2 += std::norm(x);
      }
    }
    cb.words.set_word(l, w.data(), 1.0 / std::sqrt(n2));
  }
  return cb;
}

SpatialCodebook transform_codebook(std::shared_ptr<const BaseCodebook> base, const CMatrix& phi_r,
                                   const CMatrix& phi_t, std::size_t count) {
  const int nr = base->words.nr();
  const int nt = base->words.nt();
  if (phi_r.rows() != nr || phi_t.rows() != nt)
    throw Error(ErrorKind::DimensionMismatch, "correlation size does not match the base codebook");
  const CMatrix root_r = matrix_sqrt_psd(phi_r);
  const CMatrix root_t = matrix_sqrt_psd(phi_t);

  // vec(R S T) = (T^T kron R) vec(S). With words as rows of the planes this
  // is W = S K^T, done as four real products.
  const CMatrix kron = Eigen::kroneckerProduct(root_t.transpose(), root_r);
  if (count == 0) count = base->size();
  if (count > base->size()) throw Error(ErrorKind::InvalidArgument, "prefix longer than the base codebook");
  SpatialCodebook out{CodewordSet(nr, nt, count), base, phi_r, phi_t, {}};
  const auto rows = static_cast<Eigen::Index>(count);
  const Eigen::MatrixXd kr = kron.real().transpose();
  const Eigen::MatrixXd ki = kron.imag().transpose();
  const auto s_re = base->words.re_plane().topRows(rows);
  const auto s_im = base->words.im_plane().topRows(rows);
  auto w_re = out.words.re_plane();
  auto w_im = out.words.im_plane();
  w_re.noalias() = s_re * kr;
  w_re.noalias() -= s_im * ki;
  w_im.noalias() = s_re * ki;
  w_im.noalias() += s_im * kr;
  const Eigen::VectorXd norms = (w_re.rowwise().squaredNorm() + w_im.rowwise().squaredNorm()).cwiseSqrt();
  CVector word(kron.rows());
  for (Eigen::Index l = 0; l < rows; ++l) {
    double norm = norms(l);
    if (norm >= kDegenerateNorm) {
      w_re.row(l) /= norm;
      w_im.row(l) /= norm;
      continue;
    }
    // A word entirely in the null space carries no direction; redraw it from
    // a per-word stream of the base seed.
    out.regenerated.push_back(static_cast<std::size_t>(l));
    for (std::uint64_t attempt = 0; norm < kDegenerateNorm; ++attempt) {
      if (attempt == 64) throw Error(ErrorKind::DegenerateCodeword, "correlation annihilates every redraw");
      Rng redraw = make_rng(base->seed, {tag(Stream::Codebook), static_cast<std::uint64_t>(l), attempt});
      word.noalias() = kron * vec(random_unit_word(nr, nt, redraw));
      norm = word.norm();
    }
    out.words.set_word(static_cast<std::size_t>(l), word.data(), 1.0 / norm);
  }
  return out;
}

SpatialCodebook as_spatial(std::shared_ptr<const BaseCodebook> base) {
  const int nr = base->words.nr();
  const int nt = base->words.nt();
  SpatialCodebook out{base->words, base, CMatrix::Identity(nr, nr), CMatrix::Identity(nt, nt), {}};
  return out;
}

QuantizationResult project_onto(const CMatrix& h, const CMatrix& h_hat, std::size_t index) {
  QuantizationResult r;
  r.index = index;
  r.h_hat = h_hat;
  r.alpha = vec(h_hat).dot(vec(h));  // conjugates the first argument
  r.delta_h = h - r.alpha * h_hat;
  r.distortion = r.delta_h.squaredNorm();
  return r;
}

QuantizationResult quantize(const CMatrix& h, const CodewordSet& words) { return quantize(h, words, words.size()); }

QuantizationResult quantize(const CMatrix& h, const CodewordSet& words, std::size_t prefix) {
  if (h.rows() != words.nr() || h.cols() != words.nt())
    throw Error(ErrorKind::DimensionMismatch, "channel size does not match the codebook");
  if (h.squaredNorm() == 0.0) throw Error(ErrorKind::ZeroInput, "cannot quantize a zero matrix");
  const std::size_t n = words.entries();
  std::vector<double> h_re(n), h_im(n);
  for (std::size_t e = 0; e < n; ++e) {
    h_re[e] = h.data()[e].real();
    h_im[e] = h.data()[e].imag();
  }
  if (prefix == 0) throw Error(ErrorKind::InvalidArgument, "empty codebook");
  const kernels::BestMatch best = kernels::best_match(h_re, h_im, words.view(prefix));
  return project_onto(h, words.word(best.index), best.index);
}

HighResolutionQuantizer::HighResolutionQuantizer(int nr, int nt)
    : nr_(nr), nt_(nt), support_(CMatrix::Identity(nr * nt, nr * nt)), inv_eig_(RVector::Ones(nr * nt)) {}

HighResolutionQuantizer::HighResolutionQuantizer(const CMatrix& phi_r, const CMatrix& phi_t)
    : nr_(static_cast<int>(phi_r.rows())), nt_(static_cast<int>(phi_t.rows())) {
  // Covariance of vec(W) before normalization is phi_t^T kron phi_r; its
  // eigenpairs are products of the factors' eigenpairs.
  const Eigen::SelfAdjointEigenSolver<CMatrix> er(0.5 * (phi_r + phi_r.adjoint()));
  const Eigen::SelfAdjointEigenSolver<CMatrix> et(0.5 * (phi_t + phi_t.adjoint()));
  const double top_r = er.eigenvalues().maxCoeff();
  const double top_t = et.eigenvalues().maxCoeff();
  std::vector<int> keep_r, keep_t;
  for (int m = 0; m < nr_; ++m)
    if (er.eigenvalues()(m) > kDefaultRankEps * top_r) keep_r.push_back(m);
  for (int n = 0; n < nt_; ++n)
    if (et.eigenvalues()(n) > kDefaultRankEps * top_t) keep_t.push_back(n);

  const auto dim = static_cast<Eigen::Index>(keep_r.size() * keep_t.size());
  support_.resize(static_cast<Eigen::Index>(nr_) * nt_, dim);
  inv_eig_.resize(dim);
  Eigen::Index col = 0;
  for (int n : keep_t) {
    for (int m : keep_r) {
      const CVector ft = et.eigenvectors().col(n).conjugate();
      const CVector fr = er.eigenvectors().col(m);
      CVector v(static_cast<Eigen::Index>(nr_) * nt_);
      for (int c = 0; c < nt_; ++c) v.segment(static_cast<Eigen::Index>(c) * nr_, nr_) = ft(c) * fr;
      support_.col(col) = v;
      const double s = er.eigenvalues()(m) * et.eigenvalues()(n);
      inv_eig_(col) = 1.0 / s;
      log_det_ += std::log(s);
      ++col;
    }
  }
}

double HighResolutionQuantizer::log_density_ratio(const CMatrix& h) const {
  CVector x = support_.adjoint() * vec(h);
  x.normalize();
  const double quad = (x.cwiseAbs2().array() * inv_eig_.array()).sum();
  return -log_det_ - static_cast<double>(support_dim()) * std::log(quad);
}

QuantizationResult HighResolutionQuantizer::quantize(const CMatrix& h, int bits, Rng& rng) const {
  if (h.rows() != nr_ || h.cols() != nt_) throw Error(ErrorKind::DimensionMismatch, "channel size mismatch");
  if (h.squaredNorm() == 0.0) throw Error(ErrorKind::ZeroInput, "cannot quantize a zero matrix");
  if (bits < 0) throw Error(ErrorKind::InvalidArgument, "bits must be >= 0");

  const int dim = support_dim();
  CVector x = support_.adjoint() * vec(h);
  x.normalize();
  if (dim == 1) return project_onto(h, unvec(support_ * x, nr_, nt_));

  // Z = ((1 - U^(1/N)) / kappa)^(1/(M-1)), clamped to the unit interval.
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  while (u <= 0.0) u = unif(rng);
  const double log_tail = std::log(-std::expm1(std::log(u) * std::exp2(-static_cast<double>(bits))));
  const double log_z = (log_tail - log_density_ratio(h)) / static_cast<double>(dim - 1);
  const double z = std::min(1.0, std::exp(log_z));

  CVector e(dim);
  do {
    for (Eigen::Index k = 0; k < dim; ++k) e(k) = complex_normal(rng);
    e -= x * x.dot(e);
  } while (e.norm() < 1e-12);
  e.normalize();
  const double phase = 2.0 * std::numbers::pi * unif(rng);
  const CVector w = std::polar(1.0, phase) * (std::sqrt(1.0 - z) * x + std::sqrt(z) * e);
  return project_onto(h, unvec(support_ * w, nr_, nt_));
}

BetaEstimate distortion_coefficient_beta(const CMatrix& phi_r, const CMatrix& phi_t, int n_samples,
                                         std::uint64_t seed) {
  if (n_samples < 10000) throw Error(ErrorKind::InvalidArgument, "beta estimation needs at least 1e4 samples");
  const Eigen::SelfAdjointEigenSolver<CMatrix> er(0.5 * (phi_r + phi_r.adjoint()), Eigen::EigenvaluesOnly);
  const Eigen::SelfAdjointEigenSolver<CMatrix> et(0.5 * (phi_t + phi_t.adjoint()), Eigen::EigenvaluesOnly);
  std::vector<double> lambda, sigma;
  for (Eigen::Index m = 0; m < er.eigenvalues().size(); ++m)
    if (er.eigenvalues()(m) > kDefaultRankEps * er.eigenvalues().maxCoeff()) lambda.push_back(er.eigenvalues()(m));
  for (Eigen::Index n = 0; n < et.eigenvalues().size(); ++n)
    if (et.eigenvalues()(n) > kDefaultRankEps * et.eigenvalues().maxCoeff()) sigma.push_back(et.eigenvalues()(n));

  const int mr = static_cast<int>(lambda.size());
  const int mt = static_cast<int>(sigma.size());
  const int m = mr * mt;
  if (m == 1) throw Error(ErrorKind::RankOne, "beta is undefined for rank-one statistics");
  const double nn = static_cast<double>(phi_r.rows() * phi_t.rows());
  const double k1 = 1.0 / (m - 1);
  const double k2 = (2.0 * m - 1.0) / (m - 1);

  std::vector<double> prod;
  double log_prod = 0.0;
  for (double s : sigma)
    for (double l : lambda) {
      prod.push_back(l * s);
      log_prod += std::log(l * s);
    }

  constexpr int kBlock = 4096;
  const int blocks = (n_samples + kBlock - 1) / kBlock;
  std::vector<double> sum(blocks, 0.0), sum_sq(blocks, 0.0);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < blocks; ++b) {
    Rng rng = make_rng(seed, {tag(Stream::Beta), static_cast<std::uint64_t>(b)});
    std::chi_squared_distribution<double> chi2(2.0);
    const int end = std::min(n_samples, (b + 1) * kBlock);
    for (int s = b * kBlock; s < end; ++s) {
      double a = 0.0, weighted = 0.0, c = 0.0;
      for (double p : prod) {
        const double y = chi2(rng);
        a += y;
        weighted += p * y;
        c += p * (nn - p) * y;
      }
      const double v = std::pow(a / weighted, k2) * c;
      sum[b] += v;
      sum_sq[b] += v * v;
    }
  }
  double total = 0.0, total_sq = 0.0;
  for (int b = 0; b < blocks; ++b) {
    total += sum[b];
    total_sq += sum_sq[b];
  }
  const double mean = total / n_samples;
  const double var = std::max(0.0, (total_sq - n_samples * mean * mean) / (n_samples - 1));
  const double scale = std::exp(k1 * log_prod) / (2.0 * m);
  return {scale * mean, scale * std::sqrt(var / n_samples), mr, mt};
}

double distortion_bound(double beta, int m_r, int m_t, double bits) {
  const int m = m_r * m_t;
  if (m == 1) throw Error(ErrorKind::RankOne, "distortion bound is undefined for rank-one statistics");
  if (bits < 0) throw Error(ErrorKind::InvalidArgument, "bits must be >= 0");
  return beta * std::exp2(-bits / (m - 1));
}

nlohmann::json to_json(const BaseCodebook& cb) {
  nlohmann::json words = nlohmann::json::array();
  for (std::size_t l = 0; l < cb.size(); ++l) words.push_back(to_json(cb.word(l)));
  return {{"nr", cb.words.nr()}, {"nt", cb.words.nt()}, {"bits", cb.bits},
          {"seed", cb.seed},     {"transform", "base"}, {"words", std::move(words)}};
}

nlohmann::json to_json(const SpatialCodebook& cb) {
  int bits = 0;
  while ((std::size_t{1} << bits) < cb.size()) ++bits;
  nlohmann::json base_words = nlohmann::json::array();
  nlohmann::json words = nlohmann::json::array();
  for (std::size_t l = 0; l < cb.size(); ++l) {
    base_words.push_back(to_json(cb.source->word(l)));
    words.push_back(to_json(cb.word(l)));
  }
  return {{"nr", cb.words.nr()},       {"nt", cb.words.nt()},       {"bits", bits},
          {"seed", cb.source->seed},   {"transform", "spatial"},    {"phi_r", to_json(cb.phi_r)},
          {"phi_t", to_json(cb.phi_t)}, {"base_words", std::move(base_words)}, {"words", std::move(words)}};
}

SpatialCodebook codebook_from_json(const nlohmann::json& j) {
  try {
    const int nr = j.at("nr").get<int>();
    const int nt = j.at("nt").get<int>();
    const int bits = j.at("bits").get<int>();
    const std::string transform = j.at("transform").get<std::string>();
    const auto& base_words = transform == "spatial" ? j.at("base_words") : j.at("words");
    if (bits < 0 || bits > 62 || base_words.size() != (std::size_t{1} << bits))
      throw Error(ErrorKind::Parse, "word count does not match bits");
    auto base = std::make_shared<BaseCodebook>(BaseCodebook{bits, j.at("seed").get<std::uint64_t>(),
                                                            CodewordSet(nr, nt, base_words.size())});
    for (std::size_t l = 0; l < base_words.size(); ++l) {
      const CMatrix w = cmatrix_from_json(base_words[l]);
      if (w.rows() != nr || w.cols() != nt) throw Error(ErrorKind::Parse, "codeword size mismatch");
      base->words.set_word(l, w);
    }
    if (transform == "base") return as_spatial(base);
    if (transform == "spatial")
      return transform_codebook(base, cmatrix_from_json(j.at("phi_r")), cmatrix_from_json(j.at("phi_t")));
    throw Error(ErrorKind::Parse, "unknown transform id '" + transform + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, e.what());
  }
}

}  // namespace lfia
