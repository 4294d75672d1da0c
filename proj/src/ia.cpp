#include "lfia/ia.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace lfia {

const char* to_string(Feasibility f) {
  switch (f) {
    case Feasibility::Feasible: return "Feasible";
    case Feasibility::Infeasible: return "Infeasible";
    case Feasibility::Unknown: return "Unknown";
  }
  return "Unknown";
}

Feasibility check_feasibility(const SystemDims& dims) {
  if (dims.d < 1 || dims.d > std::min(dims.nt, dims.nr)) return Feasibility::Unknown;
  return dims.nt + dims.nr >= (dims.k + 1) * dims.d ? Feasibility::Feasible : Feasibility::Infeasible;
}

namespace {

// First entry of each column with magnitude above 1e-12 made real positive.
void fix_phase(CMatrix& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const double mag = std::abs(m(r, c));
      if (mag > 1e-12) {
        m.col(c) *= std::conj(m(r, c)) / mag;
        break;
      }
    }
  }
}

class LeakageMinimizer {
 public:
  LeakageMinimizer(const CrossLinks& links, const SystemDims& dims) : dims_(dims) {
    const int k = dims.k;
    scaled_.resize(static_cast<std::size_t>(k) * k);
    for (int j = 0; j < k; ++j)
      for (int i = 0; i < k; ++i)
        if (i != j && links.weight(j, i) > 0.0) scaled_[idx(j, i)] = std::sqrt(links.weight(j, i)) * links.at(j, i);
  }

  // Receiver update from the current precoders.
  void update_receivers(TransceiverSet& ts) {
    for (int j = 0; j < dims_.k; ++j) {
      q_r_.setZero(dims_.nr, dims_.nr);
      for (int i = 0; i < dims_.k; ++i) {
        if (i == j || scaled_[idx(j, i)].size() == 0) continue;
        g_r_.noalias() = scaled_[idx(j, i)] * ts.v[i];
        q_r_.noalias() += g_r_ * g_r_.adjoint();
      }
      eig_r_.compute(q_r_);
      ts.u[j] = eig_r_.eigenvectors().leftCols(dims_.d);
      fix_phase(ts.u[j]);
    }
  }

  // Reciprocal-network update; returns the total leakage afterwards.
  double update_transmitters(TransceiverSet& ts) {
    double total = 0.0;
    for (int i = 0; i < dims_.k; ++i) {
      q_t_.setZero(dims_.nt, dims_.nt);
      for (int j = 0; j < dims_.k; ++j) {
        if (i == j || scaled_[idx(j, i)].size() == 0) continue;
        g_t_.noalias() = scaled_[idx(j, i)].adjoint() * ts.u[j];
        q_t_.noalias() += g_t_ * g_t_.adjoint();
      }
      eig_t_.compute(q_t_);
      ts.v[i] = eig_t_.eigenvectors().leftCols(dims_.d);
      fix_phase(ts.v[i]);
      total += std::max(0.0, eig_t_.eigenvalues().head(dims_.d).sum());
    }
    return total;
  }

 private:
  std::size_t idx(int j, int i) const { return static_cast<std::size_t>(j) * dims_.k + i; }

  SystemDims dims_;
  std::vector<CMatrix> scaled_;
  CMatrix q_r_, q_t_, g_r_, g_t_;
  Eigen::SelfAdjointEigenSolver<CMatrix> eig_r_, eig_t_;
};

void check_inputs(const CrossLinks& links, const SystemDims& dims) {
  if (dims.k < 1 || dims.d < 1 || dims.d > std::min(dims.nt, dims.nr))
    throw Error(ErrorKind::DimensionMismatch, "invalid system dimensions");
  const auto n = static_cast<std::size_t>(dims.k) * dims.k;
  if (links.k != dims.k || links.h.size() != n || links.w.size() != n)
    throw Error(ErrorKind::DimensionMismatch, "cross-link grid must be K x K");
  for (int j = 0; j < dims.k; ++j)
    for (int i = 0; i < dims.k; ++i) {
      if (i == j) continue;
      const CMatrix& h = links.at(j, i);
      if (h.rows() != dims.nr || h.cols() != dims.nt)
        throw Error(ErrorKind::DimensionMismatch, "cross-link matrix must be Nr x Nt");
    }
}

}  // namespace

CMatrix random_orthonormal(int rows, int cols, Rng& rng) {
  const CMatrix g = complex_normal_matrix(rows, cols, rng);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ() * CMatrix::Identity(rows, cols);
  // Rotate columns so the R diagonal is positive, which makes Q Haar.
  const CMatrix r = qr.matrixQR().topLeftCorner(cols, cols).triangularView<Eigen::Upper>();
  for (int c = 0; c < cols; ++c) {
    const double mag = std::abs(r(c, c));
    if (mag > 0.0) q.col(c) *= r(c, c) / mag;
  }
  return q;
}

TransceiverSet random_transceivers(const SystemDims& dims, Rng& rng) {
  TransceiverSet ts;
  for (int p = 0; p < dims.k; ++p) {
    ts.v.push_back(random_orthonormal(dims.nt, dims.d, rng));
    ts.u.push_back(random_orthonormal(dims.nr, dims.d, rng));
  }
  return ts;
}

double leakage(const TransceiverSet& ts, const CrossLinks& links) {
  double total = 0.0;
  for (int j = 0; j < links.k; ++j)
    for (int i = 0; i < links.k; ++i) {
      if (i == j || links.weight(j, i) == 0.0) continue;
      total += links.weight(j, i) * (ts.u[j].adjoint() * links.at(j, i) * ts.v[i]).squaredNorm();
    }
  return total;
}

IaResult compute_ia(const CrossLinks& links, const SystemDims& dims, const IaOptions& opts) {
  check_inputs(links, dims);
  if (opts.max_iters < 1 || opts.restart_count < 1 || opts.leakage_floor < 0.0)
    throw Error(ErrorKind::InvalidArgument, "IA limits must be positive");

  LeakageMinimizer solver(links, dims);
  IaResult best;
  bool have_best = false;
  for (int restart = 0; restart < opts.restart_count; ++restart) {
    Rng rng = make_rng(opts.init_seed, {tag(Stream::IaInit), static_cast<std::uint64_t>(restart)});
    IaResult run;
    run.ts = random_transceivers(dims, rng);
    run.initial_leakage = leakage(run.ts, links);
    double current = run.initial_leakage;
    bool aligned = current <= opts.leakage_floor;
    run.converged = aligned;
    while (!run.converged && run.iterations < opts.max_iters) {
      solver.update_receivers(run.ts);
      const double next = solver.update_transmitters(run.ts);
      ++run.iterations;
      if (opts.keep_trace) run.trace.push_back(next);
      const double change = std::abs(current - next) / std::max(next, 1e-30);
      current = next;
      aligned = current <= opts.alignment_tol * run.initial_leakage || current <= opts.leakage_floor;
      run.converged = aligned || change < opts.leakage_tol;
    }
    run.leakage = leakage(run.ts, links);
    run.restarts_used = restart + 1;
    if (!have_best || run.leakage < best.leakage) {
      best = std::move(run);
      have_best = true;
    }
    best.restarts_used = restart + 1;
    if (best.leakage <= opts.alignment_tol * best.initial_leakage || best.leakage <= opts.leakage_floor) break;
  }
  return best;
}

void write_trace_csv(std::ostream& os, const std::vector<double>& trace) {
  os << "iteration,leakage\n";
  os.precision(17);
  for (std::size_t n = 0; n < trace.size(); ++n) os << n + 1 << ',' << trace[n] << '\n';
}

}  // namespace lfia
