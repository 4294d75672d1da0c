#pragma once

#include <vector>

#include "lfia/topology.hpp"

namespace lfia {

struct LinkId {
  int j = 0;  // receiver
  int i = 0;  // transmitter
  friend bool operator==(const LinkId&, const LinkId&) = default;
};

/// Per-link inputs of the RINR bound and the bit allocator.
struct LinkQuantStats {
  LinkId id;
  double beta = 0.0;
  double l = 0.0;
  int m_r = 1;
  int m_t = 1;

  int rank_product() const { return m_r * m_t; }
  /// Receives bits only with a usable gain and a non-degenerate direction.
  bool eligible(double gain_floor = kDefaultGainFloor) const { return l > gain_floor && rank_product() >= 2; }
  /// beta * l / (M - 1): the weight of 2^(-B / (M - 1)) in the RINR bound.
  double weight(double gain_floor = kDefaultGainFloor) const;
};

struct BitAllocation {
  std::vector<LinkId> links;
  std::vector<int> bits;
  int budget = 0;
  /// Water level of the continuous solution (NaN for non-water-filling
  /// allocations).
  double water_level = 0.0;
  /// Continuous solution before rounding (empty for equal allocations).
  std::vector<double> real_bits;

  int bits_for(LinkId id) const;
  int total() const;
};

/// Continuous optimum of sum_ji w_ji 2^(-B_ji / (M_ji - 1)) under a sum
/// budget, floored then topped up greedily by largest marginal decrease and
/// polished with single-bit transfers. The common P*d factor is dropped.
BitAllocation allocate_bits(const std::vector<LinkQuantStats>& stats, int budget,
                            double gain_floor = kDefaultGainFloor);

/// floor(budget / n) bits each, remainder to the lowest link ids.
BitAllocation equal_allocation(int budget, const std::vector<LinkId>& links);

/// sum_ji w_ji 2^(-B_ji / (M_ji - 1)) over eligible links; the allocator's
/// objective without the P*d factor.
double allocation_objective(const std::vector<LinkQuantStats>& stats, const std::vector<int>& bits,
                            double gain_floor = kDefaultGainFloor);

/// Average-RINR bound at receiver rx:
/// P d sum_{i != rx} (beta l / (M - 1)) 2^(-B / (M - 1)).
double rinr_upper_bound(const BitAllocation& alloc, const std::vector<LinkQuantStats>& stats, double p, int d,
                        int rx, double gain_floor = kDefaultGainFloor);

/// Sum feedback bits that keep the full DoF as P grows:
/// ceil(sum 1{l > 0} (M_r M_t - 1) log2 P + c_b).
int scaling_bits(double p, const std::vector<LinkQuantStats>& stats, double c_b,
                 double gain_floor = kDefaultGainFloor);

}  // namespace lfia
