#include "lfia/topology.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

namespace lfia {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NotHermitian: return "NotHermitian";
    case ErrorKind::NegativeEigenvalue: return "NegativeEigenvalue";
    case ErrorKind::CorrelationNotPSD: return "CorrelationNotPSD";
    case ErrorKind::BudgetTooLarge: return "BudgetTooLarge";
    case ErrorKind::DegenerateCodeword: return "DegenerateCodeword";
    case ErrorKind::ZeroInput: return "ZeroInput";
    case ErrorKind::RankOne: return "RankOne";
    case ErrorKind::NoEligibleLinks: return "NoEligibleLinks";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::Parse: return "Parse";
  }
  return "Unknown";
}

namespace {

void require_hermitian(const CMatrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw Error(ErrorKind::DimensionMismatch, "expected a nonempty square matrix");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (asym > kHermitianTol * scale)
    throw Error(ErrorKind::NotHermitian, "asymmetry " + std::to_string(asym));
}

Eigen::SelfAdjointEigenSolver<CMatrix> hermitian_eig(const CMatrix& m) {
  require_hermitian(m);
  // Symmetrize so round-off in the input never leaks into the eigenvectors.
  const CMatrix sym = 0.5 * (m + m.adjoint());
  return Eigen::SelfAdjointEigenSolver<CMatrix>(sym);
}

bool is_identity(const CMatrix& m) {
  return m.rows() == m.cols() && (m - CMatrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff() == 0.0;
}

}  // namespace

void SystemDims::validate() const {
  if (k < 2) throw Error(ErrorKind::InvalidArgument, "K must be at least 2");
  if (nt < 1 || nr < 1) throw Error(ErrorKind::InvalidArgument, "antenna counts must be positive");
  if (d < 1 || d > std::min(nt, nr))
    throw Error(ErrorKind::InvalidArgument, "d must satisfy 1 <= d <= min(Nt, Nr)");
}

CMatrix matrix_sqrt_psd(const CMatrix& m) {
  if (is_identity(m)) return m;
  const auto eig = hermitian_eig(m);
  RVector lambda = eig.eigenvalues();
  // Eigenvalues under the rank threshold are round-off; keeping them would
  // leak about sqrt(1e-16) of every sample into the null space.
  const double floor = kDefaultRankEps * std::max(lambda.maxCoeff(), 0.0);
  for (Eigen::Index n = 0; n < lambda.size(); ++n) {
    if (lambda(n) < -kHermitianTol)
      throw Error(ErrorKind::NegativeEigenvalue, "eigenvalue " + std::to_string(lambda(n)));
    lambda(n) = lambda(n) > floor ? std::sqrt(lambda(n)) : 0.0;
  }
  const CMatrix& f = eig.eigenvectors();
  return f * lambda.cast<Complex>().asDiagonal() * f.adjoint();
}

int effective_rank(const CMatrix& m, double eps_rank) {
  const auto eig = hermitian_eig(m);
  const RVector& lambda = eig.eigenvalues();
  if (lambda.minCoeff() < -kHermitianTol)
    throw Error(ErrorKind::NegativeEigenvalue, "matrix is not PSD");
  const double top = lambda.maxCoeff();
  if (top <= 0.0) return 0;
  return static_cast<int>((lambda.array() > eps_rank * top).count());
}

CMatrix range_projector(const CMatrix& m, double eps_rank) {
  const auto eig = hermitian_eig(m);
  const RVector& lambda = eig.eigenvalues();
  const double top = lambda.maxCoeff();
  CMatrix p = CMatrix::Zero(m.rows(), m.cols());
  for (Eigen::Index n = 0; n < lambda.size(); ++n) {
    if (lambda(n) > eps_rank * top) {
      const CVector f = eig.eigenvectors().col(n);
      p += f * f.adjoint();
    }
  }
  return p;
}

CMatrix exponential_correlation(int n, Complex eps) {
  if (std::abs(eps) >= 1.0)
    throw Error(ErrorKind::CorrelationNotPSD, "exponential correlation needs |eps| < 1");
  CMatrix phi(n, n);
  for (int p = 0; p < n; ++p) {
    for (int q = p; q < n; ++q) {
      phi(p, q) = std::pow(eps, q - p);
      phi(q, p) = std::conj(phi(p, q));
    }
  }
  return phi;
}

LinkStats LinkStats::make(CMatrix phi_r, CMatrix phi_t, double l, double eps_rank) {
  LinkStats s;
  s.phi_r = std::move(phi_r);
  s.phi_t = std::move(phi_t);
  s.l = l;
  s.m_r = effective_rank(s.phi_r, eps_rank);
  s.m_t = effective_rank(s.phi_t, eps_rank);
  s.sqrt_r = matrix_sqrt_psd(s.phi_r);
  s.sqrt_t = matrix_sqrt_psd(s.phi_t);
  s.validate(static_cast<int>(s.phi_r.rows()), static_cast<int>(s.phi_t.rows()));
  return s;
}

LinkStats LinkStats::identity(int nr, int nt, double l) {
  return make(CMatrix::Identity(nr, nr), CMatrix::Identity(nt, nt), l);
}

void LinkStats::validate(int nr, int nt) const {
  if (phi_r.rows() != nr || phi_r.cols() != nr || phi_t.rows() != nt || phi_t.cols() != nt)
    throw Error(ErrorKind::DimensionMismatch, "correlation matrix size does not match Nr/Nt");
  require_hermitian(phi_r);
  require_hermitian(phi_t);
  if (std::abs(phi_r.trace().real() - nr) > kTraceTol || std::abs(phi_t.trace().real() - nt) > kTraceTol)
    throw Error(ErrorKind::InvalidArgument, "correlation traces must equal Nr and Nt");
  if (!(l >= 0.0) || !std::isfinite(l)) throw Error(ErrorKind::InvalidArgument, "gain must be finite and >= 0");
  if (m_r < 1 || m_r > nr || m_t < 1 || m_t > nt)
    throw Error(ErrorKind::InvalidArgument, "effective ranks out of range");
}

InterferenceTopologyProfile::InterferenceTopologyProfile(SystemDims dims, std::vector<LinkStats> links)
    : dims_(dims), links_(std::move(links)) {
  validate();
}

InterferenceTopologyProfile InterferenceTopologyProfile::homogeneous(SystemDims dims) {
  dims.validate();
  const LinkStats iid = LinkStats::identity(dims.nr, dims.nt);
  return {dims, std::vector<LinkStats>(static_cast<std::size_t>(dims.k) * dims.k, iid)};
}

bool InterferenceTopologyProfile::direct_links_iid() const {
  for (int j = 0; j < dims_.k; ++j) {
    const LinkStats& s = link(j, j);
    if (s.l != 1.0 || !is_identity(s.phi_r) || !is_identity(s.phi_t)) return false;
  }
  return true;
}

void InterferenceTopologyProfile::validate() const {
  dims_.validate();
  if (links_.size() != static_cast<std::size_t>(dims_.k) * dims_.k)
    throw Error(ErrorKind::DimensionMismatch, "ITP needs K*K link entries");
  for (const LinkStats& s : links_) s.validate(dims_.nr, dims_.nt);
}

ChannelRealization sample_channel(const Itp& itp, Rng& rng) {
  const SystemDims& dims = itp.dims();
  ChannelRealization out;
  out.k = dims.k;
  out.h.reserve(static_cast<std::size_t>(dims.k) * dims.k);
  for (int j = 0; j < dims.k; ++j) {
    for (int i = 0; i < dims.k; ++i) {
      const LinkStats& s = itp.link(j, i);
      CMatrix hw = complex_normal_matrix(dims.nr, dims.nt, rng);
      if (!is_identity(s.sqrt_r)) hw = s.sqrt_r * hw;
      if (!is_identity(s.sqrt_t)) hw = hw * s.sqrt_t;
      out.h.push_back(std::move(hw));
    }
  }
  return out;
}

Itp random_itp_from_normals(const SystemDims& dims, Complex eps, double delta2,
                            const std::vector<double>& normals) {
  dims.validate();
  if (!(delta2 >= 0.0)) throw Error(ErrorKind::InvalidArgument, "delta2 must be >= 0");
  if (normals.size() != static_cast<std::size_t>(dims.cross_links()))
    throw Error(ErrorKind::DimensionMismatch, "one shadowing draw per cross link expected");
  CMatrix phi_t = exponential_correlation(dims.nt, eps);
  // Unit diagonal already gives trace Nt; rescale only against round-off.
  phi_t *= static_cast<double>(dims.nt) / phi_t.trace().real();
  const LinkStats direct = LinkStats::identity(dims.nr, dims.nt);
  const LinkStats cross = LinkStats::make(CMatrix::Identity(dims.nr, dims.nr), phi_t, 1.0);
  const double u = -0.5 * delta2;
  const double sigma = std::sqrt(delta2);

  std::vector<LinkStats> links;
  links.reserve(static_cast<std::size_t>(dims.k) * dims.k);
  std::size_t n = 0;
  for (int j = 0; j < dims.k; ++j) {
    for (int i = 0; i < dims.k; ++i) {
      if (i == j) {
        links.push_back(direct);
      } else {
        LinkStats s = cross;
        s.l = std::exp(u + sigma * normals[n++]);
        links.push_back(std::move(s));
      }
    }
  }
  return {dims, std::move(links)};
}

Itp sample_random_itp(const SystemDims& dims, Complex eps, double delta2, Rng& rng) {
  if (std::abs(eps) >= 1.0)
    throw Error(ErrorKind::CorrelationNotPSD, "exponential correlation needs |eps| < 1");
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> normals(static_cast<std::size_t>(dims.cross_links()));
  for (double& x : normals) x = z(rng);
  return random_itp_from_normals(dims, eps, delta2, normals);
}

nlohmann::json to_json(const CMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

CMatrix cmatrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty() || !j.front().is_array())
    throw Error(ErrorKind::Parse, "matrix must be a nonempty list of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  CMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw Error(ErrorKind::Parse, "ragged matrix rows");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& z = row[static_cast<std::size_t>(c)];
      if (!z.is_array() || z.size() != 2) throw Error(ErrorKind::Parse, "entries must be [re, im]");
      m(r, c) = Complex(z[0].get<double>(), z[1].get<double>());
    }
  }
  return m;
}

nlohmann::json to_json(const SystemDims& dims) {
  return {{"K", dims.k}, {"Nt", dims.nt}, {"Nr", dims.nr}, {"d", dims.d}};
}

SystemDims dims_from_json(const nlohmann::json& j) {
  try {
    SystemDims dims{j.at("K").get<int>(), j.at("Nt").get<int>(), j.at("Nr").get<int>(), j.at("d").get<int>()};
    dims.validate();
    return dims;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, e.what());
  }
}

nlohmann::json to_json(const LinkStats& s) {
  return {{"phi_r", to_json(s.phi_r)}, {"phi_t", to_json(s.phi_t)}, {"l", s.l}, {"m_r", s.m_r}, {"m_t", s.m_t}};
}

LinkStats link_stats_from_json(const nlohmann::json& j) {
  try {
    return LinkStats::make(cmatrix_from_json(j.at("phi_r")), cmatrix_from_json(j.at("phi_t")),
                           j.value("l", 1.0));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, e.what());
  }
}

nlohmann::json to_json(const Itp& itp) {
  nlohmann::json links = nlohmann::json::array();
  for (int j = 0; j < itp.dims().k; ++j) {
    for (int i = 0; i < itp.dims().k; ++i) {
      nlohmann::json entry = to_json(itp.link(j, i));
      entry["j"] = j;
      entry["i"] = i;
      links.push_back(std::move(entry));
    }
  }
  return {{"dims", to_json(itp.dims())}, {"links", std::move(links)}};
}

Itp itp_from_json(const nlohmann::json& j) {
  try {
    const SystemDims dims = dims_from_json(j.at("dims"));
    std::vector<LinkStats> links(static_cast<std::size_t>(dims.k) * dims.k);
    std::vector<bool> seen(links.size(), false);
    for (const auto& entry : j.at("links")) {
      const int rx = entry.at("j").get<int>();
      const int tx = entry.at("i").get<int>();
      if (rx < 0 || rx >= dims.k || tx < 0 || tx >= dims.k)
        throw Error(ErrorKind::Parse, "link index out of range");
      const std::size_t idx = static_cast<std::size_t>(rx) * dims.k + tx;
      links[idx] = link_stats_from_json(entry);
      seen[idx] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
      throw Error(ErrorKind::Parse, "ITP is missing link entries");
    return {dims, std::move(links)};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, e.what());
  }
}

}  // namespace lfia
