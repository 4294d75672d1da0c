#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "lfia/allocation.hpp"
#include "lfia/codebook.hpp"
#include "lfia/evaluation.hpp"
#include "lfia/ia.hpp"
#include "lfia/topology.hpp"
#include "lfia/version.hpp"

namespace lfia {

/// DFS: spatial codebooks, dynamic bits. CVQ: base codebooks, equal bits.
/// HDS1: spatial, equal. HDS2: base, dynamic. RB: random transceivers.
/// PERFECT: IA on the true channels (reference, not a feedback scheme).
enum class Scheme { DFS, CVQ, HDS1, HDS2, RB, Perfect };

const char* to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);
bool uses_spatial_codebook(Scheme s);
bool uses_dynamic_bits(Scheme s);

enum class SweepAxis { Bits, Snr, SnrScaled, Correlation, Shadowing };

const char* to_string(SweepAxis a);
SweepAxis axis_from_string(const std::string& s);

struct CodebookOptions {
  /// Links with more bits than this use the high-resolution quantizer
  /// instead of an enumerated codebook.
  int exhaustive_max_bits = 14;
  int max_bits = kDefaultMaxCodebookBits;
  /// Reuse one codebook per link for all trials instead of drawing a fresh
  /// one per trial.
  bool fixed = false;
};

struct ScenarioConfig {
  SystemDims dims{4, 3, 2, 1};
  /// Explicit topology; when empty the random model (eps, delta2) is used.
  std::optional<Itp> itp;
  Complex eps{0.7, 0.0};
  double delta2 = 3.0;
  std::vector<double> snr_db{25.0};
  std::vector<int> budgets{120};
  std::vector<Scheme> schemes{Scheme::DFS, Scheme::CVQ, Scheme::HDS1, Scheme::HDS2, Scheme::RB};
  int trials = 500;
  std::uint64_t seed = 1;
  IaOptions ia = default_ia_options();
  bool bounds = true;
  std::string output;
  /// Axis values for correlation (|eps|, phase of eps kept) and shadowing.
  std::vector<double> eps_values{0.1, 0.4, 0.7, 0.9};
  std::vector<double> delta2_values{0.5, 1.5, 3.0, 4.5};
  /// Constant of the SNR-scaled budget rule.
  double c_b = 0.0;
  int beta_samples = 100000;
  CodebookOptions codebook;

  static IaOptions default_ia_options();
  void validate() const;
};

ScenarioConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioConfig& c);
ScenarioConfig load_config(const std::string& path);

/// One evaluated point of the parameter space.
struct SweepPoint {
  double snr_db = 0.0;
  int budget = 0;
  Complex eps{0.0, 0.0};
  double delta2 = 0.0;
};

/// Per-trial outcome of one scheme at one point.
struct TrialOutcome {
  ThroughputSample sample;
  bool converged = true;
  /// Bound terms of this trial's topology; NaN when the scheme has no bound.
  double r_low = 0.0;
  double r_low_conventional = 0.0;
  std::vector<double> i_upp;
};

struct SimRecord {
  std::string scheme;
  double snr_db = 0.0;
  int budget = 0;
  double eps = 0.0;
  double delta2 = 0.0;
  int trials = 0;
  double mean_rinr = 0.0;
  double rinr_hw = 0.0;
  std::vector<double> rinr_per_rx;
  double mean_r_lim = 0.0;
  double r_lim_hw = 0.0;
  double r_per = 0.0;
  double r_low = 0.0;
  double r_low_conventional = 0.0;
  double i_upp = 0.0;
  int not_converged = 0;
  std::uint64_t seed = 0;
};

/// Column order of the CSV output.
const std::vector<std::string>& sim_record_columns();
void write_csv_header(std::ostream& os);
void write_csv_row(std::ostream& os, const SimRecord& r);

/// Raw per-trial outcomes, indexed [point][scheme][trial].
struct SweepResult {
  std::vector<SweepPoint> points;
  std::vector<Scheme> schemes;
  std::vector<std::vector<std::vector<TrialOutcome>>> outcomes;
  std::vector<SimRecord> records;

  const std::vector<TrialOutcome>& at(std::size_t point, Scheme s) const;
  int not_converged() const;
};

/// Points for simulate (snr x budget at the configured topology) or a sweep
/// along one axis.
std::vector<SweepPoint> make_points(const ScenarioConfig& c, std::optional<SweepAxis> axis);

/// Runs every scheme at every point. Trial t draws its topology, channels,
/// codebooks and IA starts from streams keyed by (seed, t) only, so schemes
/// and points are compared on common random numbers.
SweepResult run_sweep(const ScenarioConfig& c, const std::vector<SweepPoint>& points);

/// Per-link statistics for the allocator, beta from Monte Carlo.
std::vector<LinkQuantStats> link_quant_stats(const Itp& itp, int beta_samples, std::uint64_t seed);

/// Per-rx mean RINR at Rx 1 of the toy network for the two schemes.
struct Table1Result {
  std::vector<int> budgets;
  int trials = 0;
  /// [budget][trial] RINR at Rx 1.
  std::vector<std::vector<double>> conventional;
  std::vector<std::vector<double>> dynamic;
  int not_converged = 0;
  std::vector<SimRecord> records;
};

/// The four-pair toy network: Nt = 3, Nr = 2, d = 1, H_13 with transmit
/// correlation diag(2.8, 0.1, 0.1), H_14 i.i.d. with gain 0.1, P = 1.
Itp table1_topology();

Table1Result table1_experiment(int trials, std::uint64_t seed, const std::vector<int>& budgets = {4, 10, 16},
                               const IaOptions& ia = ScenarioConfig::default_ia_options());

/// Mean, standard error and normal-approximation helpers.
struct Summary {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  double half_width(double z = 1.959963984540054) const { return z * std_error; }
};

Summary summarize(const std::vector<double>& x);
/// Summary of x - y for paired samples.
Summary summarize_paired(const std::vector<double>& x, const std::vector<double>& y);

/// JSON sidecar content: config echo, versions, seed and run facts.
nlohmann::json run_metadata(const nlohmann::json& config_echo, const std::string& command, int not_converged);

}  // namespace lfia
