#pragma once

#include <cstdint>
#include <vector>

#include "lfia/allocation.hpp"
#include "lfia/ia.hpp"
#include "lfia/topology.hpp"

namespace lfia {

/// Per-receiver rates (bits/s/Hz) and residual interference of one channel
/// draw.
struct ThroughputSample {
  std::vector<double> rates;
  std::vector<double> rinr;
  std::uint64_t seed = 0;

  double total_rate() const;
  double mean_rinr() const;
};

/// (P / d) sum_{i != rx} l ||U_rx^H H V_i||^2 on the given (true) channels.
double rinr(const TransceiverSet& ts, const ChannelRealization& ch, const Itp& itp, double p, int rx);

/// Rate of receiver rx treating residual interference as noise:
/// log2 det(I + C + (P/d) S S^H) - log2 det(I + C).
double rate(const TransceiverSet& ts, const ChannelRealization& ch, const Itp& itp, double p, int rx);

/// Sum of rate() over all receivers.
double throughput_limited(const TransceiverSet& ts, const ChannelRealization& ch, const Itp& itp, double p);

ThroughputSample evaluate(const TransceiverSet& ts, const ChannelRealization& ch, const Itp& itp, double p);

/// Marginal density of an unordered eigenvalue of a complex central Wishart
/// W_d(I, d): (1/d) e^(-v) sum_{k<d} L_k(v)^2.
double wishart_marginal_pdf(int d, double v);

/// d * int log2(1 + a + c v) f_d(v) dv, adaptive Gauss-Kronrod with absolute
/// tolerance 1e-10. Throws QuadratureFailure if the error estimate exceeds
/// 1e-8.
double log2_wishart_integral(int d, double a, double c);

/// K d int log2(1 + (P/d) v) f(v) dv.
double throughput_perfect(double p, int d, int k);

/// sum_j [d int log2(1 + E{I_j}/d + (P/d) v) f(v) dv - d log2(1 + E{I_j}/d)].
double throughput_lb_given_rinr(const std::vector<double>& avg_rinrs, double p, int d);

/// Same penalty, but the first E{I_j} is dropped:
/// sum_j [d int log2(1 + (P/d) v) f(v) dv - d log2(1 + E{I_j}/d)].
double throughput_lb_conventional(const std::vector<double>& avg_rinrs, double p, int d);

/// Per-receiver RINR bounds for an allocation, each rx_bound / d being
/// P sum_i (beta l / (M - 1)) 2^(-B / (M - 1)).
std::vector<double> rinr_upper_bounds(const BitAllocation& alloc, const std::vector<LinkQuantStats>& stats,
                                      double p, int d, int k, double gain_floor = kDefaultGainFloor);

/// Lower bound on R_lim for a quantization scheme with spatial codebooks and
/// the given allocation.
double throughput_lb_scheme(const BitAllocation& alloc, const std::vector<LinkQuantStats>& stats, double p,
                            int d, int k, double gain_floor = kDefaultGainFloor);

struct BoundReport {
  double r_per = 0.0;
  double r_low = 0.0;
  double r_low_conventional = 0.0;
  std::vector<double> i_upp;
};

BoundReport bound_report(const BitAllocation& alloc, const std::vector<LinkQuantStats>& stats, double p, int d,
                         int k, double gain_floor = kDefaultGainFloor);

}  // namespace lfia
