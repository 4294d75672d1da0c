#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"

#include "lfia/common.hpp"
#include "lfia/rng.hpp"

namespace lfia {

inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kTraceTol = 1e-8;
inline constexpr double kDefaultRankEps = 1e-9;
inline constexpr double kDefaultGainFloor = 1e-12;

struct SystemDims {
  int k = 0;   // Tx-Rx pairs
  int nt = 0;  // antennas per Tx
  int nr = 0;  // antennas per Rx
  int d = 0;   // streams per pair

  /// Throws InvalidArgument unless K >= 2 and 1 <= d <= min(Nt, Nr).
  void validate() const;
  int cross_links() const { return k * (k - 1); }
  friend bool operator==(const SystemDims&, const SystemDims&) = default;
};

/// Second-order statistics of one link Tx i -> Rx j.
struct LinkStats {
  CMatrix phi_r;  // Nr x Nr receive correlation
  CMatrix phi_t;  // Nt x Nt transmit correlation
  double l = 1.0;  // large-scale gain, linear
  int m_r = 0;     // effective rank of phi_r
  int m_t = 0;     // effective rank of phi_t
  CMatrix sqrt_r;  // cached phi_r^(1/2)
  CMatrix sqrt_t;  // cached phi_t^(1/2)

  /// Builds stats and computes the effective ranks. Validates PSD-ness and
  /// the trace normalization.
  static LinkStats make(CMatrix phi_r, CMatrix phi_t, double l, double eps_rank = kDefaultRankEps);
  static LinkStats identity(int nr, int nt, double l = 1.0);

  int rank_product() const { return m_r * m_t; }
  void validate(int nr, int nt) const;
};

/// Per-link statistics for the whole network. Entry (j, i) describes the
/// channel from Tx i to Rx j.
class InterferenceTopologyProfile {
 public:
  InterferenceTopologyProfile() = default;
  InterferenceTopologyProfile(SystemDims dims, std::vector<LinkStats> links);

  /// Every link i.i.d. Rayleigh with unit gain.
  static InterferenceTopologyProfile homogeneous(SystemDims dims);

  const SystemDims& dims() const { return dims_; }
  const LinkStats& link(int j, int i) const { return links_[index(j, i)]; }
  LinkStats& link(int j, int i) { return links_[index(j, i)]; }
  const std::vector<LinkStats>& links() const { return links_; }

  /// True when every direct link has identity correlations and unit gain.
  bool direct_links_iid() const;
  void validate() const;

 private:
  std::size_t index(int j, int i) const { return static_cast<std::size_t>(j) * dims_.k + i; }

  SystemDims dims_;
  std::vector<LinkStats> links_;
};

using Itp = InterferenceTopologyProfile;

/// One draw of every small-scale matrix H_ji, Nr x Nt each.
struct ChannelRealization {
  int k = 0;
  std::vector<CMatrix> h;
  std::uint64_t seed_tag = 0;

  const CMatrix& at(int j, int i) const { return h[static_cast<std::size_t>(j) * k + i]; }
  CMatrix& at(int j, int i) { return h[static_cast<std::size_t>(j) * k + i]; }
};

/// F diag(sqrt(lambda)) F^H. Eigenvalues in [-1e-10, 0) clamp to zero, as do
/// positive ones at or below the rank threshold relative to the largest.
CMatrix matrix_sqrt_psd(const CMatrix& m);

/// Number of eigenvalues above eps_rank times the largest eigenvalue.
int effective_rank(const CMatrix& m, double eps_rank = kDefaultRankEps);

/// Orthogonal projector onto the range of a PSD matrix.
CMatrix range_projector(const CMatrix& m, double eps_rank = kDefaultRankEps);

/// Exponential correlation model: entry (p, q) = eps^(q - p) for q >= p,
/// Hermitian below the diagonal.
CMatrix exponential_correlation(int n, Complex eps);

ChannelRealization sample_channel(const Itp& itp, Rng& rng);

/// Random topology: cross links get identity receive correlation, an
/// exponential transmit correlation and i.i.d. log-normal gains with the
/// mean normalized to one; direct links are i.i.d. Rayleigh with unit gain.
Itp sample_random_itp(const SystemDims& dims, Complex eps, double delta2, Rng& rng);

/// Same model, but the shadowing is driven by caller-provided standard normal
/// draws (one per cross link, row-major over (j, i), i != j). Lets sweeps
/// share shadowing draws across parameter points.
Itp random_itp_from_normals(const SystemDims& dims, Complex eps, double delta2,
                            const std::vector<double>& normals);

nlohmann::json to_json(const CMatrix& m);
CMatrix cmatrix_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SystemDims& dims);
SystemDims dims_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LinkStats& s);
LinkStats link_stats_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Itp& itp);
Itp itp_from_json(const nlohmann::json& j);

}  // namespace lfia
