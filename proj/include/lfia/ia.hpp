#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "lfia/topology.hpp"

namespace lfia {

struct TransceiverSet {
  std::vector<CMatrix> v;  // precoders, Nt x d
  std::vector<CMatrix> u;  // decorrelators, Nr x d
};

struct IaOptions {
  int max_iters = 2000;
  double leakage_tol = 1e-10;  // relative change in total leakage
  std::uint64_t init_seed = 0;
  int restart_count = 3;
  /// A run also stops once leakage falls to this fraction of its initial
  /// value; later restarts are skipped because they cannot do better.
  double alignment_tol = 1e-14;
  /// Also stop once the weighted leakage (noise-power units when the weights
  /// carry l P / d) is at most this absolute value. 0 disables the rule.
  double leakage_floor = 0.0;
  bool keep_trace = false;
};

struct IaResult {
  TransceiverSet ts;
  double leakage = 0.0;
  double initial_leakage = 0.0;
  int iterations = 0;
  int restarts_used = 0;
  bool converged = false;
  /// Total leakage after every iteration of the winning restart.
  std::vector<double> trace;
};

/// Cross-link channel matrices and weights for the solver; entry (j, j) is
/// ignored. Weight (j, i) multiplies ||U_j^H H_ji V_i||^2.
struct CrossLinks {
  int k = 0;
  std::vector<CMatrix> h;
  std::vector<double> w;

  const CMatrix& at(int j, int i) const { return h[static_cast<std::size_t>(j) * k + i]; }
  double weight(int j, int i) const { return w[static_cast<std::size_t>(j) * k + i]; }
};

enum class Feasibility { Feasible, Infeasible, Unknown };

const char* to_string(Feasibility f);

/// Symmetric proper-system screen: Feasible if Nt + Nr >= (K + 1) d,
/// Infeasible otherwise; Unknown when d exceeds min(Nt, Nr).
Feasibility check_feasibility(const SystemDims& dims);

/// Alternating leakage minimization. Each receiver keeps the eigenvectors of
/// the d smallest eigenvalues of its weighted interference covariance; the
/// reciprocal network updates precoders the same way. Best of
/// restart_count random starts. Throws DimensionMismatch on malformed input;
/// non-convergence is reported through IaResult::converged.
IaResult compute_ia(const CrossLinks& links, const SystemDims& dims, const IaOptions& opts);

/// sum_j sum_{i != j} w_ji ||U_j^H H_ji V_i||^2.
double leakage(const TransceiverSet& ts, const CrossLinks& links);

/// Haar-distributed orthonormal U and V for every pair.
TransceiverSet random_transceivers(const SystemDims& dims, Rng& rng);

/// Orthonormal basis of the column space of a random Gaussian matrix.
CMatrix random_orthonormal(int rows, int cols, Rng& rng);

/// Writes "iteration,leakage" rows.
void write_trace_csv(std::ostream& os, const std::vector<double>& trace);

}  // namespace lfia
