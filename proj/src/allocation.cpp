#include "lfia/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lfia {

double LinkQuantStats::weight(double gain_floor) const {
  if (!eligible(gain_floor)) return 0.0;
  return beta * l / (rank_product() - 1);
}

int BitAllocation::bits_for(LinkId id) const {
  for (std::size_t n = 0; n < links.size(); ++n)
    if (links[n] == id) return bits[n];
  return 0;
}

int BitAllocation::total() const { return std::accumulate(bits.begin(), bits.end(), 0); }

double allocation_objective(const std::vector<LinkQuantStats>& stats, const std::vector<int>& bits,
                            double gain_floor) {
  double total = 0.0;
  for (std::size_t n = 0; n < stats.size(); ++n) {
    if (!stats[n].eligible(gain_floor)) continue;
    total += stats[n].weight(gain_floor) * std::exp2(-static_cast<double>(bits[n]) / (stats[n].rank_product() - 1));
  }
  return total;
}

namespace {

struct Term {
  std::size_t slot;   // position in the stats vector
  double exponent;    // M - 1
  double offset;      // log2(beta l / (M - 1)^2)
  double weight;      // beta l / (M - 1)

  double value(int b) const { return weight * std::exp2(-b / exponent); }
  double real_bits(double level) const { return std::max(0.0, exponent * (offset + level)); }
};

double total_real(const std::vector<Term>& terms, double level) {
  double s = 0.0;
  for (const Term& t : terms) s += t.real_bits(level);
  return s;
}

}  // namespace

BitAllocation allocate_bits(const std::vector<LinkQuantStats>& stats, int budget, double gain_floor) {
  if (budget < 0) throw Error(ErrorKind::InvalidArgument, "budget must be >= 0");
  std::vector<Term> terms;
  for (std::size_t n = 0; n < stats.size(); ++n) {
    const LinkQuantStats& s = stats[n];
    if (!s.eligible(gain_floor)) continue;
    if (!(s.beta > 0.0)) throw Error(ErrorKind::InvalidArgument, "beta must be positive on eligible links");
    const double a = s.rank_product() - 1;
    terms.push_back({n, a, std::log2(s.beta * s.l / (a * a)), s.weight(gain_floor)});
  }
  if (terms.empty()) throw Error(ErrorKind::NoEligibleLinks, "no link has positive gain and rank product >= 2");

  BitAllocation out;
  out.budget = budget;
  out.bits.assign(stats.size(), 0);
  out.real_bits.assign(stats.size(), 0.0);
  for (const LinkQuantStats& s : stats) out.links.push_back(s.id);

  // Water level: bisection on the monotone sum. The bracket starts at
  // [-200, 200] and widens only for extreme inputs.
  double lo = -200.0, hi = 200.0;
  while (total_real(terms, lo) > 0.0) lo *= 2.0;
  while (total_real(terms, hi) < budget) hi *= 2.0;
  if (budget == 0) {
    double top = -std::numeric_limits<double>::infinity();
    for (const Term& t : terms) top = std::max(top, t.offset);
    hi = -top;
    lo = hi;
  }
  for (int it = 0; it < 500 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (total_real(terms, mid) < budget ? lo : hi) = mid;
  }
  out.water_level = 0.5 * (lo + hi);

  std::vector<int> b(terms.size());
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const double x = terms[k].real_bits(out.water_level);
    out.real_bits[terms[k].slot] = x;
    b[k] = static_cast<int>(std::floor(x + 1e-9));
  }

  auto gain_add = [&](std::size_t k) { return terms[k].value(b[k]) - terms[k].value(b[k] + 1); };
  auto cost_remove = [&](std::size_t k) { return terms[k].value(b[k] - 1) - terms[k].value(b[k]); };
  int assigned = std::accumulate(b.begin(), b.end(), 0);
  while (assigned < budget) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < terms.size(); ++k)
      if (gain_add(k) > gain_add(best)) best = k;
    ++b[best];
    ++assigned;
  }
  while (assigned > budget) {
    std::size_t best = terms.size();
    for (std::size_t k = 0; k < terms.size(); ++k)
      if (b[k] > 0 && (best == terms.size() || cost_remove(k) < cost_remove(best))) best = k;
    --b[best];
    --assigned;
  }

  // Single-bit transfers until none improves; for a separable convex
  // objective this reaches the integer optimum.
  for (int pass = 0; pass < 100000; ++pass) {
    double best_delta = 0.0;
    std::size_t from = 0, to = 0;
    for (std::size_t a = 0; a < terms.size(); ++a) {
      if (b[a] == 0) continue;
      for (std::size_t c = 0; c < terms.size(); ++c) {
        if (c == a) continue;
        const double delta = cost_remove(a) - gain_add(c);
        if (delta < best_delta) {
          best_delta = delta;
          from = a;
          to = c;
        }
      }
    }
    if (best_delta >= -1e-15 * allocation_objective(stats, out.bits, gain_floor) - 1e-300) break;
    --b[from];
    ++b[to];
  }
  for (std::size_t k = 0; k < terms.size(); ++k) out.bits[terms[k].slot] = b[k];
  return out;
}

BitAllocation equal_allocation(int budget, const std::vector<LinkId>& links) {
  if (budget < 0) throw Error(ErrorKind::InvalidArgument, "budget must be >= 0");
  if (links.empty()) throw Error(ErrorKind::NoEligibleLinks, "no links to allocate");
  BitAllocation out;
  out.links = links;
  out.budget = budget;
  out.water_level = std::numeric_limits<double>::quiet_NaN();
  const int n = static_cast<int>(links.size());
  // "Lowest link id" is (j, i) lexicographic.
  std::vector<std::size_t> order(links.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::pair(links[a].j, links[a].i) < std::pair(links[b].j, links[b].i);
  });
  out.bits.assign(links.size(), budget / n);
  for (int r = 0; r < budget % n; ++r) ++out.bits[order[static_cast<std::size_t>(r)]];
  return out;
}

double rinr_upper_bound(const BitAllocation& alloc, const std::vector<LinkQuantStats>& stats, double p, int d,
                        int rx, double gain_floor) {
  double total = 0.0;
  for (const LinkQuantStats& s : stats) {
    if (s.id.j != rx || s.id.i == rx || !s.eligible(gain_floor)) continue;
    total += s.weight(gain_floor) * std::exp2(-static_cast<double>(alloc.bits_for(s.id)) / (s.rank_product() - 1));
  }
  return p * d * total;
}

int scaling_bits(double p, const std::vector<LinkQuantStats>& stats, double c_b, double gain_floor) {
  if (!(p >= 1.0)) throw Error(ErrorKind::InvalidArgument, "scaling law needs P >= 1");
  double coeff = 0.0;
  for (const LinkQuantStats& s : stats)
    if (s.l > gain_floor) coeff += s.rank_product() - 1;
  const double x = coeff * std::log2(p) + c_b;
  // Guard the ceiling against round-off in log2 (e.g. 600.0000000001).
  return static_cast<int>(std::ceil(x - 1e-9 * std::max(1.0, std::abs(x))));
}

}  // namespace lfia
