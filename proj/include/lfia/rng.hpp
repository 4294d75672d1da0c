#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

#include <boost/random/normal_distribution.hpp>

#include "lfia/common.hpp"

namespace lfia {

using Rng = std::mt19937_64;

/// Purpose tags for named substreams. Values are part of the reproducibility
/// contract; append only.
enum class Stream : std::uint64_t {
  Topology = 1,
  Channel = 2,
  Codebook = 3,
  IaInit = 4,
  RandomBeam = 5,
  Beta = 6,
  Quantizer = 7,
  Table1 = 8,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent seed from a parent seed and a path of identifiers
/// (cell id, trial id, purpose tag, link id, ...).
inline std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(parent ^ 0x6c66696173656564ULL);
  for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

inline std::uint64_t tag(Stream s) { return static_cast<std::uint64_t>(s); }

inline Rng make_rng(std::uint64_t parent, std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(parent, path));
}

/// Standard circularly-symmetric complex Gaussian CN(0, 1), real part
/// first. Boost's ziggurat sampler is used for speed.
inline Complex complex_normal(Rng& rng) {
  boost::random::normal_distribution<double> n(0.0, 0.7071067811865476);
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

inline CMatrix complex_normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  CMatrix m(rows, cols);
  // Column-major fill order is part of the reproducibility contract.
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = complex_normal(rng);
  return m;
}

}  // namespace lfia
