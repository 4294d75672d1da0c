#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "json.hpp"

#include "lfia/common.hpp"
#include "lfia/kernels.hpp"
#include "lfia/rng.hpp"

namespace lfia {

inline constexpr int kDefaultMaxCodebookBits = 24;

/// Unit-norm complex Nr x Nt codewords in vec() order, stored as real and
/// imaginary planes for the correlation kernels.
class CodewordSet {
 public:
  CodewordSet() = default;
  CodewordSet(int nr, int nt, std::size_t count);

  int nr() const { return nr_; }
  int nt() const { return nt_; }
  std::size_t size() const { return count_; }
  std::size_t entries() const { return static_cast<std::size_t>(nr_) * nt_; }

  CMatrix word(std::size_t l) const;
  void get_word(std::size_t l, Complex* out) const;
  void set_word(std::size_t l, const CMatrix& w);
  /// Stores scale * w for a vec()-ordered word.
  void set_word(std::size_t l, const Complex* w, double scale);
  kernels::PlaneView view() const { return view(count_); }
  /// The first `prefix` words.
  kernels::PlaneView view(std::size_t prefix) const;

  using PlaneMap = Eigen::Map<Eigen::MatrixXd, 0, Eigen::OuterStride<>>;
  using ConstPlaneMap = Eigen::Map<const Eigen::MatrixXd, 0, Eigen::OuterStride<>>;
  /// count x entries views of the real and imaginary planes.
  PlaneMap re_plane() { return {re_.data(), static_cast<Eigen::Index>(count_), static_cast<Eigen::Index>(entries()), Eigen::OuterStride<>(static_cast<Eigen::Index>(stride_))}; }
  PlaneMap im_plane() { return {im_.data(), static_cast<Eigen::Index>(count_), static_cast<Eigen::Index>(entries()), Eigen::OuterStride<>(static_cast<Eigen::Index>(stride_))}; }
  ConstPlaneMap re_plane() const { return {re_.data(), static_cast<Eigen::Index>(count_), static_cast<Eigen::Index>(entries()), Eigen::OuterStride<>(static_cast<Eigen::Index>(stride_))}; }
  ConstPlaneMap im_plane() const { return {im_.data(), static_cast<Eigen::Index>(count_), static_cast<Eigen::Index>(entries()), Eigen::OuterStride<>(static_cast<Eigen::Index>(stride_))}; }

 private:
  int nr_ = 0;
  int nt_ = 0;
  std::size_t count_ = 0;
  std::size_t stride_ = 0;
  std::vector<double> re_;
  std::vector<double> im_;
};

/// Random vector quantization codebook: i.i.d. CN(0, 1) entries normalized to
/// unit Frobenius norm. Words are drawn sequentially from one stream, so the
/// 2^B book is a prefix of the 2^(B+1) book with the same seed.
struct BaseCodebook {
  int bits = 0;
  std::uint64_t seed = 0;
  CodewordSet words;

  CMatrix word(std::size_t l) const { return words.word(l); }
  std::size_t size() const { return words.size(); }
};

BaseCodebook gen_base_codebook(int nr, int nt, int bits, std::uint64_t seed,
                               int max_bits = kDefaultMaxCodebookBits);

/// Codewords W^l = phi_r^(1/2) S^l phi_t^(1/2), renormalized.
struct SpatialCodebook {
  CodewordSet words;
  std::shared_ptr<const BaseCodebook> source;
  CMatrix phi_r;
  CMatrix phi_t;
  /// Indices of base words that fell in the null space and were regenerated.
  std::vector<std::size_t> regenerated;

  CMatrix word(std::size_t l) const { return words.word(l); }
  std::size_t size() const { return words.size(); }
};

/// Transforms the first `count` base words (all when count is 0).
SpatialCodebook transform_codebook(std::shared_ptr<const BaseCodebook> base, const CMatrix& phi_r,
                                   const CMatrix& phi_t, std::size_t count = 0);

/// Identity transform: the base words themselves.
SpatialCodebook as_spatial(std::shared_ptr<const BaseCodebook> base);

struct QuantizationResult {
  std::size_t index = 0;
  CMatrix h_hat;
  Complex alpha;
  CMatrix delta_h;
  double distortion = 0.0;
};

/// Exhaustive search: highest |<vec(h), vec(W)>|, lowest index among ties.
QuantizationResult quantize(const CMatrix& h, const CodewordSet& words);
/// Search restricted to the first `prefix` words (the nested smaller book).
QuantizationResult quantize(const CMatrix& h, const CodewordSet& words, std::size_t prefix);
inline QuantizationResult quantize(const CMatrix& h, const SpatialCodebook& cb) { return quantize(h, cb.words); }
inline QuantizationResult quantize(const CMatrix& h, const BaseCodebook& cb) { return quantize(h, cb.words); }

/// Splits h into alpha * h_hat + delta_h for a unit-norm h_hat.
QuantizationResult project_onto(const CMatrix& h, const CMatrix& h_hat, std::size_t index = 0);

/// Draws the codeword an enumerated random codebook of 2^bits words would
/// select, without enumerating it.
///
/// The quantizer's words follow a complex angular central Gaussian law with
/// covariance (phi_t^T kron phi_r) restricted to its support; identity
/// correlations give the isotropic base codebook. The best of N such words
/// has chordal distortion Z with P(Z > z) = (1 - kappa z^(M-1))^N, where M is
/// the support dimension and kappa the codeword density at the channel
/// direction relative to uniform. For isotropic codebooks kappa = 1 and the
/// law is exact; otherwise it is the high-resolution limit (density locally
/// constant over the quantization cell). The residual direction is isotropic
/// in the orthogonal complement of the channel direction within the support.
class HighResolutionQuantizer {
 public:
  /// Isotropic codebook over all Nr*Nt dimensions.
  HighResolutionQuantizer(int nr, int nt);
  /// Spatially transformed codebook.
  HighResolutionQuantizer(const CMatrix& phi_r, const CMatrix& phi_t);

  int support_dim() const { return static_cast<int>(support_.cols()); }
  /// log of the codeword density ratio at the direction of h.
  double log_density_ratio(const CMatrix& h) const;

  QuantizationResult quantize(const CMatrix& h, int bits, Rng& rng) const;

 private:
  int nr_;
  int nt_;
  CMatrix support_;       // NrNt x M orthonormal basis of the codeword span
  RVector inv_eig_;       // 1 / eigenvalues of the covariance on the support
  double log_det_ = 0.0;  // log det of the covariance on the support
};

struct BetaEstimate {
  double value = 0.0;
  double std_error = 0.0;
  int m_r = 0;
  int m_t = 0;
};

/// Monte Carlo estimate of the distortion coefficient from the nonzero
/// eigenvalues of phi_r and phi_t. Throws RankOne when m_r * m_t == 1.
BetaEstimate distortion_coefficient_beta(const CMatrix& phi_r, const CMatrix& phi_t, int n_samples,
                                         std::uint64_t seed);

/// beta * 2^(-bits / (m_r m_t - 1)).
double distortion_bound(double beta, int m_r, int m_t, double bits);

nlohmann::json to_json(const BaseCodebook& cb);
nlohmann::json to_json(const SpatialCodebook& cb);
/// Reads either export; spatial exports regenerate their words from the
/// embedded base words and correlations.
SpatialCodebook codebook_from_json(const nlohmann::json& j);

}  // namespace lfia
