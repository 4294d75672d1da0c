#include "lfia/evaluation.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace lfia {

namespace {

double log2det_hpd(const CMatrix& a) {
  const Eigen::LLT<CMatrix> llt(a);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotHermitian, "matrix is not positive definite");
  double s = 0.0;
  for (Eigen::Index n = 0; n < a.rows(); ++n) s += std::log2(llt.matrixLLT()(n, n).real());
  return 2.0 * s;
}

void check_eval_inputs(const TransceiverSet& ts, const ChannelRealization& ch, const Itp& itp, int rx) {
  const int k = itp.dims().k;
  if (rx < 0 || rx >= k) throw Error(ErrorKind::InvalidArgument, "receiver index out of range");
  if (ch.k != k || static_cast<int>(ts.u.size()) != k || static_cast<int>(ts.v.size()) != k)
    throw Error(ErrorKind::DimensionMismatch, "network size mismatch");
}

}  // namespace

double ThroughputSample::total_rate() const { return std::accumulate(rates.begin(), rates.end(), 0.0); }

double ThroughputSample::mean_rinr() const {
  return rinr.empty() ? 0.0 : std::accumulate(rinr.begin(), rinr.end(), 0.0) / static_cast<double>(rinr.size());
}

double rinr(const TransceiverSet& ts, const ChannelRealization& ch, const Itp& itp, double p, int rx) {
  check_eval_inputs(ts, ch, itp, rx);
  const SystemDims& dims = itp.dims();
  double total = 0.0;
  for (int i = 0; i < dims.k; ++i) {
    if (i == rx) continue;
    total += itp.link(rx, i).l * (ts.u[rx].adjoint() * ch.at(rx, i) * ts.v[i]).squaredNorm();
  }
  return p / dims.d * total;
}

double rate(const TransceiverSet& ts, const ChannelRealization& ch, const Itp& itp, double p, int rx) {
  check_eval_inputs(ts, ch, itp, rx);
  const SystemDims& dims = itp.dims();
  const double scale = p / dims.d;
  CMatrix c = CMatrix::Identity(dims.d, dims.d);
  for (int i = 0; i < dims.k; ++i) {
    if (i == rx) continue;
    const CMatrix g = ts.u[rx].adjoint() * ch.at(rx, i) * ts.v[i];
    c.noalias() += scale * itp.link(rx, i).l * g * g.adjoint();
  }
  const CMatrix s = std::sqrt(itp.link(rx, rx).l) * (ts.u[rx].adjoint() * ch.at(rx, rx) * ts.v[rx]);
  CMatrix total = c;
  total.noalias() += scale * s * s.adjoint();
  return std::max(0.0, log2det_hpd(total) - log2det_hpd(c));
}

double throughput_limited(const TransceiverSet& ts, const ChannelRealization& ch, const Itp& itp, double p) {
  double sum = 0.0;
  for (int j = 0; j < itp.dims().k; ++j) sum += rate(ts, ch, itp, p, j);
  return sum;
}

ThroughputSample evaluate(const TransceiverSet& ts, const ChannelRealization& ch, const Itp& itp, double p) {
  ThroughputSample out;
  out.seed = ch.seed_tag;
  for (int j = 0; j < itp.dims().k; ++j) {
    out.rates.push_back(rate(ts, ch, itp, p, j));
    out.rinr.push_back(rinr(ts, ch, itp, p, j));
  }
  return out;
}

double wishart_marginal_pdf(int d, double v) {
  if (d < 1) throw Error(ErrorKind::InvalidArgument, "d must be >= 1");
  if (v < 0.0) return 0.0;
  const double decay = std::exp(-v);
  if (decay == 0.0) return 0.0;
  double s = 0.0;
  for (int k = 0; k < d; ++k) {
    const double lk = std::laguerre(static_cast<unsigned>(k), v);
    s += lk * lk;
  }
  return decay * s / d;
}

double log2_wishart_integral(int d, double a, double c) {
  if (d < 1) throw Error(ErrorKind::InvalidArgument, "d must be >= 1");
  if (a < 0.0 || c < 0.0) throw Error(ErrorKind::InvalidArgument, "integrand parameters must be >= 0");
  if (c == 0.0) return d * std::log2(1.0 + a);
  // The density decays like v^(2d-2) e^(-v); beyond v_max the tail is far
  // below the tolerance.
  const double v_max = 60.0 + 20.0 * d;
  auto f = [&](double v) { return std::log2(1.0 + a + c * v) * wishart_marginal_pdf(d, v); };
  double err = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, v_max, 20, 1e-13, &err);
  if (!std::isfinite(value) || err > 1e-8 * std::max(1.0, std::abs(value)))
    throw Error(ErrorKind::QuadratureFailure, "error estimate " + std::to_string(err));
  return d * value;
}

double throughput_perfect(double p, int d, int k) {
  if (!(p >= 0.0)) throw Error(ErrorKind::InvalidArgument, "P must be >= 0");
  return k * log2_wishart_integral(d, 0.0, p / d);
}

double throughput_lb_given_rinr(const std::vector<double>& avg_rinrs, double p, int d) {
  double sum = 0.0;
  for (double e : avg_rinrs) {
    if (e < 0.0) throw Error(ErrorKind::InvalidArgument, "average RINR must be >= 0");
    sum += log2_wishart_integral(d, e / d, p / d) - d * std::log2(1.0 + e / d);
  }
  return sum;
}

double throughput_lb_conventional(const std::vector<double>& avg_rinrs, double p, int d) {
  const double clean = log2_wishart_integral(d, 0.0, p / d);
  double sum = 0.0;
  for (double e : avg_rinrs) {
    if (e < 0.0) throw Error(ErrorKind::InvalidArgument, "average RINR must be >= 0");
    sum += clean - d * std::log2(1.0 + e / d);
  }
  return sum;
}

std::vector<double> rinr_upper_bounds(const BitAllocation& alloc, const std::vector<LinkQuantStats>& stats,
                                      double p, int d, int k, double gain_floor) {
  std::vector<double> out;
  for (int j = 0; j < k; ++j) out.push_back(rinr_upper_bound(alloc, stats, p, d, j, gain_floor));
  return out;
}

double throughput_lb_scheme(const BitAllocation& alloc, const std::vector<LinkQuantStats>& stats, double p,
                            int d, int k, double gain_floor) {
  return throughput_lb_given_rinr(rinr_upper_bounds(alloc, stats, p, d, k, gain_floor), p, d);
}

BoundReport bound_report(const BitAllocation& alloc, const std::vector<LinkQuantStats>& stats, double p, int d,
                         int k, double gain_floor) {
  BoundReport r;
  r.i_upp = rinr_upper_bounds(alloc, stats, p, d, k, gain_floor);
  r.r_per = throughput_perfect(p, d, k);
  r.r_low = throughput_lb_given_rinr(r.i_upp, p, d);
  r.r_low_conventional = throughput_lb_conventional(r.i_upp, p, d);
  return r;
}

}  // namespace lfia
