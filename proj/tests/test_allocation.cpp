#include <cmath>
#include <functional>
#include <limits>

#include "doctest.h"
#include "oracles.hpp"

#include "lfia/allocation.hpp"

using namespace lfia;

namespace {

LinkQuantStats link(int j, int i, double beta, double l, int mr = 2, int mt = 3) {
  return {{j, i}, beta, l, mr, mt};
}

std::vector<LinkQuantStats> homogeneous(int k, double beta = 5.0) {
  std::vector<LinkQuantStats> out;
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i)
      if (i != j) out.push_back(link(j, i, beta, 1.0));
  return out;
}

// Exhaustive integer search over all splits of the budget.
double brute_force_best(const std::vector<LinkQuantStats>& s, int budget) {
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> b(s.size(), 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t n, int left) {
    if (n + 1 == s.size()) {
      b[n] = left;
      double v = 0.0;
      for (std::size_t k = 0; k < s.size(); ++k)
        if (s[k].l > 0 && s[k].m_r * s[k].m_t >= 2)
          v += s[k].beta * s[k].l / (s[k].m_r * s[k].m_t - 1) * std::exp2(-b[k] / double(s[k].m_r * s[k].m_t - 1));
      best = std::min(best, v);
      return;
    }
    for (int x = 0; x <= left; ++x) {
      b[n] = x;
      rec(n + 1, left - x);
    }
  };
  rec(0, budget);
  return best;
}

}  // namespace

TEST_SUITE("allocation") {

TEST_CASE("symmetric links split evenly") {
  const BitAllocation a = allocate_bits(homogeneous(4), 120);
  for (int b : a.bits) CHECK(b == 10);
  CHECK(a.total() == 120);
}

TEST_CASE("two links with a tenfold gain gap") {
  const std::vector<LinkQuantStats> s{link(0, 1, 5.0, 1.0), link(1, 0, 5.0, 0.1)};
  const BitAllocation a = allocate_bits(s, 20);
  CHECK(a.real_bits[0] == doctest::Approx(10.0 + 2.5 * std::log2(10.0)).epsilon(1e-9));
  CHECK(a.real_bits[1] == doctest::Approx(10.0 - 2.5 * std::log2(10.0)).epsilon(1e-9));
  CHECK(a.real_bits[0] - a.real_bits[1] == doctest::Approx(5.0 * std::log2(10.0)));
  CHECK(a.total() == 20);
  CHECK(allocation_objective(s, a.bits) <= 1.01 * brute_force_best(s, 20));
}

TEST_CASE("zero budget") {
  const auto s = homogeneous(3);
  const BitAllocation a = allocate_bits(s, 0);
  for (int b : a.bits) CHECK(b == 0);
  CHECK(allocation_objective(s, a.bits) == doctest::Approx(6.0 * 5.0 / 5.0));
}

TEST_CASE("random suites agree with exhaustive search") {
  Rng rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> rank(1, 3), bud(0, 24), nlinks(1, 3);
  for (int inst = 0; inst < 200; ++inst) {
    std::vector<LinkQuantStats> s;
    const int n = nlinks(rng);
    for (int k = 0; k < n; ++k) {
      const int mr = rank(rng), mt = rank(rng);
      s.push_back(link(k, k + 1, 0.5 + 10.0 * u(rng), std::exp(-4.0 + 8.0 * u(rng)), mr, mt));
    }
    s[0].m_r = 2;
    s[0].m_t = 2;
    const int budget = bud(rng);
    const BitAllocation a = allocate_bits(s, budget);
    CHECK(a.total() == budget);
    const double best = brute_force_best(s, budget);
    CHECK(allocation_objective(s, a.bits) <= best * (1.0 + 1e-12));
  }
}

TEST_CASE("water-filling conditions") {
  std::vector<LinkQuantStats> s{link(0, 1, 5.0, 1.0), link(0, 2, 3.0, 0.3, 2, 2), link(1, 0, 2.0, 0.01, 1, 3),
                                link(1, 2, 7.0, 2.0, 2, 3)};
  const BitAllocation a = allocate_bits(s, 40);
  double sum = 0.0;
  std::vector<double> levels;
  for (std::size_t k = 0; k < s.size(); ++k) {
    sum += a.real_bits[k];
    const double m = s[k].rank_product() - 1;
    if (a.real_bits[k] > 0) levels.push_back(a.real_bits[k] / m - std::log2(s[k].beta * s[k].l / (m * m)));
    else CHECK(-std::log2(s[k].beta * s[k].l / (m * m)) >= a.water_level - 1e-9);
  }
  CHECK(sum == doctest::Approx(40.0).epsilon(1e-11));
  for (double v : levels) CHECK(v == doctest::Approx(levels.front()).epsilon(1e-6));
  CHECK(levels.front() == doctest::Approx(a.water_level).epsilon(1e-6));
}

TEST_CASE("more gain means at least as many bits") {
  std::vector<LinkQuantStats> s;
  for (int k = 0; k < 6; ++k) s.push_back(link(0, k + 1, 5.0, 0.05 * (k + 1) * (k + 1)));
  for (int budget : {0, 7, 30, 61, 200}) {
    const BitAllocation a = allocate_bits(s, budget);
    for (int k = 1; k < 6; ++k) CHECK(a.bits[k] >= a.bits[k - 1]);
  }
}

TEST_CASE("common gain scale leaves the allocation unchanged") {
  std::vector<LinkQuantStats> s{link(0, 1, 5.0, 1.0), link(0, 2, 4.0, 0.2), link(1, 2, 3.0, 0.7, 2, 2)};
  const BitAllocation a = allocate_bits(s, 33);
  for (double c : {1e-6, 0.37, 250.0}) {
    auto t = s;
    for (auto& x : t) x.l *= c;
    CHECK(allocate_bits(t, 33).bits == a.bits);
  }
}

TEST_CASE("ineligible links get nothing") {
  std::vector<LinkQuantStats> s{link(0, 1, 5.0, 1.0), link(0, 2, 1.0, 1.0, 1, 1), link(1, 0, 5.0, 0.0)};
  const BitAllocation a = allocate_bits(s, 17);
  CHECK(a.bits[0] == 17);
  CHECK(a.bits[1] == 0);
  CHECK(a.bits[2] == 0);
  std::vector<LinkQuantStats> none{link(0, 1, 1.0, 1.0, 1, 1), link(1, 0, 5.0, 1e-13)};
  CHECK_THROWS_AS(allocate_bits(none, 10), Error);
  CHECK_THROWS_AS(allocate_bits(s, -1), Error);
}

TEST_CASE("extreme inputs widen the bracket") {
  std::vector<LinkQuantStats> s{link(0, 1, 5.0, 1e-250), link(0, 2, 5.0, 1.0, 12, 20)};
  const BitAllocation a = allocate_bits(s, 5000);
  CHECK(a.total() == 5000);
  CHECK(allocation_objective(s, a.bits) <= brute_force_best(s, 0) );
}

TEST_CASE("equal allocation") {
  std::vector<LinkId> ids;
  for (const auto& s : homogeneous(4)) ids.push_back(s.id);
  const BitAllocation a = equal_allocation(120, ids);
  for (int b : a.bits) CHECK(b == 10);
  const BitAllocation c = equal_allocation(121, ids);
  CHECK(c.total() == 121);
  CHECK(c.bits_for({0, 1}) == 11);
  CHECK(c.bits_for({0, 2}) == 10);
  const BitAllocation t = equal_allocation(4, {{0, 2}, {0, 3}});
  CHECK(t.bits == std::vector<int>{2, 2});
  const BitAllocation r = equal_allocation(3, {{2, 0}, {0, 3}, {1, 0}});
  CHECK(r.bits == std::vector<int>{1, 1, 1});
  const BitAllocation r2 = equal_allocation(2, {{2, 0}, {0, 3}, {1, 0}});
  CHECK(r2.bits == std::vector<int>{0, 1, 1});
}

TEST_CASE("rinr upper bound arithmetic") {
  const auto s = homogeneous(4);
  std::vector<LinkId> ids;
  for (const auto& x : s) ids.push_back(x.id);
  CHECK(rinr_upper_bound(equal_allocation(120, ids), s, 1.0, 1, 0) == doctest::Approx(0.75));
  CHECK(rinr_upper_bound(equal_allocation(0, ids), s, 1.0, 1, 2) == doctest::Approx(3.0));
  CHECK(rinr_upper_bound(equal_allocation(0, ids), s, 10.0, 2, 2) == doctest::Approx(60.0));
  auto t = s;
  t[0].l = 0.0;
  t[1].m_t = 1;
  t[1].m_r = 1;
  CHECK(rinr_upper_bound(equal_allocation(0, ids), t, 1.0, 1, 0) == doctest::Approx(1.0));
}

TEST_CASE("scaling bits") {
  auto s = homogeneous(4);
  CHECK(scaling_bits(1024.0, s, 0.0) == 600);
  auto off = s;
  off[3].l = 0.0;
  CHECK(scaling_bits(1024.0, off, 0.0) == 550);
  auto low = s;
  for (auto& x : low) x.m_t = 2;
  CHECK(scaling_bits(1024.0, low, 0.0) == 360);
  CHECK(scaling_bits(1024.0, s, 2.5) == 603);
  CHECK(scaling_bits(1.0, s, 0.0) == 0);
  CHECK_THROWS_AS(scaling_bits(0.5, s, 0.0), Error);
}

}
