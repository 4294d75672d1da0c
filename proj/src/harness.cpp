#include "lfia/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include <Eigen/Core>

#include "lfia/kernels.hpp"
#include "lfia/version.hpp"

namespace lfia {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct SchemeName {
  Scheme scheme;
  const char* name;
};

constexpr SchemeName kSchemeNames[] = {
    {Scheme::DFS, "DFS"}, {Scheme::CVQ, "CVQ"}, {Scheme::HDS1, "HDS1"},
    {Scheme::HDS2, "HDS2"}, {Scheme::RB, "RB"},  {Scheme::Perfect, "PERFECT"},
};

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

Complex complex_from_json(const nlohmann::json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
  throw Error(ErrorKind::Parse, "expected a number or [re, im]");
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

std::size_t link_index(int k, int j, int i) { return static_cast<std::size_t>(j) * k + i; }

std::vector<LinkId> cross_link_ids(int k) {
  std::vector<LinkId> ids;
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i)
      if (i != j) ids.push_back({j, i});
  return ids;
}

std::string matrix_key(const CMatrix& m) {
  std::string key;
  char buf[64];
  for (Eigen::Index n = 0; n < m.size(); ++n) {
    std::snprintf(buf, sizeof buf, "%a,%a;", m.data()[n].real(), m.data()[n].imag());
    key += buf;
  }
  return key;
}

/// Beta per distinct correlation pair, estimated once.
class BetaCache {
 public:
  BetaCache(int samples, std::uint64_t seed) : samples_(samples), seed_(seed) {}

  double get(const LinkStats& s) {
    if (s.rank_product() < 2) return 0.0;
    const std::string key = matrix_key(s.phi_r) + "|" + matrix_key(s.phi_t);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      const double b = distortion_coefficient_beta(s.phi_r, s.phi_t, samples_, seed_).value;
      it = cache_.emplace(key, b).first;
    }
    return it->second;
  }

 private:
  int samples_;
  std::uint64_t seed_;
  std::map<std::string, double> cache_;
};

std::vector<LinkQuantStats> stats_with_beta(const Itp& itp, BetaCache& cache) {
  std::vector<LinkQuantStats> out;
  const int k = itp.dims().k;
  for (const LinkId& id : cross_link_ids(k)) {
    const LinkStats& s = itp.link(id.j, id.i);
    out.push_back({id, cache.get(s), s.l, s.m_r, s.m_t});
  }
  return out;
}

CrossLinks cross_links(int k, std::vector<CMatrix> h, const Itp& itp, double p, int d) {
  CrossLinks cl{k, std::move(h), std::vector<double>(static_cast<std::size_t>(k) * k, 0.0)};
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i)
      if (i != j) cl.w[link_index(k, j, i)] = itp.link(j, i).l * p / d;
  return cl;
}

// Topology of one point for one trial.
Itp point_topology(const ScenarioConfig& c, const SweepPoint& pt, const std::vector<double>& normals) {
  if (c.itp) return *c.itp;
  return random_itp_from_normals(c.dims, pt.eps, pt.delta2, normals);
}

std::vector<double> shadowing_normals(const ScenarioConfig& c, int trial) {
  Rng rng = make_rng(c.seed, {tag(Stream::Topology), static_cast<std::uint64_t>(trial)});
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> out(static_cast<std::size_t>(c.dims.cross_links()));
  for (double& x : out) x = n(rng);
  return out;
}

// Everything about a point that does not depend on the trial.
struct PointContext {
  double p = 0.0;
  double r_per = 0.0;
  std::vector<LinkQuantStats> stats;  // beta and ranks; gains replaced per trial
  std::vector<std::shared_ptr<HighResolutionQuantizer>> spatial_hrq;  // per cross link
  std::vector<CMatrix> phi_r, phi_t;                                  // per cross link
};

struct SchemePlan {
  BitAllocation dynamic;
  BitAllocation equal;
  std::vector<LinkQuantStats> stats;
};

double mean_of(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

}  // namespace

const char* to_string(Scheme s) {
  for (const auto& n : kSchemeNames)
    if (n.scheme == s) return n.name;
  return "?";
}

Scheme scheme_from_string(const std::string& s) {
  for (const auto& n : kSchemeNames)
    if (s == n.name) return n.scheme;
  throw Error(ErrorKind::Parse, "unknown scheme '" + s + "'");
}

bool uses_spatial_codebook(Scheme s) { return s == Scheme::DFS || s == Scheme::HDS1; }
bool uses_dynamic_bits(Scheme s) { return s == Scheme::DFS || s == Scheme::HDS2; }

const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::Bits: return "bits";
    case SweepAxis::Snr: return "snr";
    case SweepAxis::SnrScaled: return "snr-scaled";
    case SweepAxis::Correlation: return "correlation";
    case SweepAxis::Shadowing: return "shadowing";
  }
  return "?";
}

SweepAxis axis_from_string(const std::string& s) {
  for (SweepAxis a : {SweepAxis::Bits, SweepAxis::Snr, SweepAxis::SnrScaled, SweepAxis::Correlation,
                      SweepAxis::Shadowing})
    if (s == to_string(a)) return a;
  throw Error(ErrorKind::Parse, "unknown sweep axis '" + s + "'");
}

IaOptions ScenarioConfig::default_ia_options() {
  IaOptions o;
  o.leakage_floor = 1e-6;
  return o;
}

void ScenarioConfig::validate() const {
  dims.validate();
  if (trials < 1) throw Error(ErrorKind::InvalidArgument, "trials must be >= 1");
  if (snr_db.empty() || budgets.empty()) throw Error(ErrorKind::InvalidArgument, "snr and budget lists must be nonempty");
  if (schemes.empty()) throw Error(ErrorKind::InvalidArgument, "no schemes selected");
  for (int b : budgets)
    if (b < 0) throw Error(ErrorKind::InvalidArgument, "budgets must be >= 0");
  if (itp) {
    if (!(itp->dims() == dims)) throw Error(ErrorKind::DimensionMismatch, "topology dims differ from config dims");
    itp->validate();
  } else {
    if (std::abs(eps) >= 1.0) throw Error(ErrorKind::CorrelationNotPSD, "|eps| must be < 1");
    if (delta2 < 0.0) throw Error(ErrorKind::InvalidArgument, "delta2 must be >= 0");
  }
  if (beta_samples < 10000) throw Error(ErrorKind::InvalidArgument, "beta_samples must be >= 1e4");
  if (codebook.exhaustive_max_bits < 0 || codebook.exhaustive_max_bits > codebook.max_bits)
    throw Error(ErrorKind::InvalidArgument, "exhaustive_max_bits must lie in [0, max_bits]");
}

ScenarioConfig config_from_json(const nlohmann::json& j) {
  static const char* kKeys[] = {"dims",   "itp",        "snr_db",        "budgets", "schemes",
                                "trials", "seed",       "ia",            "bounds",  "output",
                                "eps_values", "delta2_values", "c_b",   "beta_samples", "codebook"};
  ScenarioConfig c;
  try {
    if (!j.is_object()) throw Error(ErrorKind::Parse, "config must be an object");
    for (const auto& [key, value] : j.items()) {
      if (std::find_if(std::begin(kKeys), std::end(kKeys), [&](const char* k) { return key == k; }) ==
          std::end(kKeys))
        throw Error(ErrorKind::Parse, "unknown config key '" + key + "'");
    }
    if (j.contains("dims")) c.dims = dims_from_json(j["dims"]);
    if (j.contains("itp")) {
      const auto& t = j["itp"];
      const std::string model = t.value("model", "random");
      if (model == "random") {
        if (t.contains("eps")) c.eps = complex_from_json(t["eps"]);
        c.delta2 = t.value("delta2", c.delta2);
      } else if (model == "explicit") {
        c.itp = itp_from_json(t.at("profile"));
      } else {
        throw Error(ErrorKind::Parse, "itp.model must be 'random' or 'explicit'");
      }
    }
    if (j.contains("snr_db")) c.snr_db = j["snr_db"].get<std::vector<double>>();
    if (j.contains("budgets")) c.budgets = j["budgets"].get<std::vector<int>>();
    if (j.contains("schemes")) {
      c.schemes.clear();
      for (const auto& s : j["schemes"]) c.schemes.push_back(scheme_from_string(s.get<std::string>()));
    }
    c.trials = j.value("trials", c.trials);
    c.seed = j.value("seed", c.seed);
    if (j.contains("ia")) {
      const auto& o = j["ia"];
      c.ia.max_iters = o.value("max_iters", c.ia.max_iters);
      c.ia.leakage_tol = o.value("leakage_tol", c.ia.leakage_tol);
      c.ia.restart_count = o.value("restart_count", c.ia.restart_count);
      c.ia.alignment_tol = o.value("alignment_tol", c.ia.alignment_tol);
      c.ia.leakage_floor = o.value("leakage_floor", c.ia.leakage_floor);
    }
    c.bounds = j.value("bounds", c.bounds);
    c.output = j.value("output", c.output);
    if (j.contains("eps_values")) c.eps_values = j["eps_values"].get<std::vector<double>>();
    if (j.contains("delta2_values")) c.delta2_values = j["delta2_values"].get<std::vector<double>>();
    c.c_b = j.value("c_b", c.c_b);
    c.beta_samples = j.value("beta_samples", c.beta_samples);
    if (j.contains("codebook")) {
      const auto& o = j["codebook"];
      c.codebook.exhaustive_max_bits = o.value("exhaustive_max_bits", c.codebook.exhaustive_max_bits);
      c.codebook.max_bits = o.value("max_bits", c.codebook.max_bits);
      c.codebook.fixed = o.value("fixed", c.codebook.fixed);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const ScenarioConfig& c) {
  nlohmann::json j;
  j["dims"] = to_json(c.dims);
  if (c.itp)
    j["itp"] = {{"model", "explicit"}, {"profile", to_json(*c.itp)}};
  else
    j["itp"] = {{"model", "random"}, {"eps", {c.eps.real(), c.eps.imag()}}, {"delta2", c.delta2}};
  j["snr_db"] = c.snr_db;
  j["budgets"] = c.budgets;
  nlohmann::json schemes = nlohmann::json::array();
  for (Scheme s : c.schemes) schemes.push_back(to_string(s));
  j["schemes"] = schemes;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["ia"] = {{"max_iters", c.ia.max_iters},         {"leakage_tol", c.ia.leakage_tol},
             {"restart_count", c.ia.restart_count}, {"alignment_tol", c.ia.alignment_tol},
             {"leakage_floor", c.ia.leakage_floor}};
  j["bounds"] = c.bounds;
  j["output"] = c.output;
  j["eps_values"] = c.eps_values;
  j["delta2_values"] = c.delta2_values;
  j["c_b"] = c.c_b;
  j["beta_samples"] = c.beta_samples;
  j["codebook"] = {{"exhaustive_max_bits", c.codebook.exhaustive_max_bits},
                   {"max_bits", c.codebook.max_bits},
                   {"fixed", c.codebook.fixed}};
  return j;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Parse, "cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, path + ": " + e.what());
  }
  // A profile may be given by a path relative to the config file.
  if (j.contains("itp") && j["itp"].contains("profile_path")) {
    const auto base = std::filesystem::path(path).parent_path();
    const auto file = base / j["itp"]["profile_path"].get<std::string>();
    std::ifstream pin(file);
    if (!pin) throw Error(ErrorKind::Parse, "cannot open profile '" + file.string() + "'");
    nlohmann::json profile;
    try {
      pin >> profile;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Parse, file.string() + ": " + e.what());
    }
    j["itp"].erase("profile_path");
    j["itp"]["profile"] = profile;
  }
  return config_from_json(j);
}

const std::vector<std::string>& sim_record_columns() {
  static const std::vector<std::string> cols = {
      "scheme", "snr_db", "budget", "eps",   "delta2", "trials", "mean_rinr",          "rinr_hw", "rinr_per_rx",
      "mean_r_lim", "r_lim_hw", "r_per", "r_low", "r_low_conventional", "i_upp", "not_converged", "seed"};
  return cols;
}

void write_csv_header(std::ostream& os) {
  const auto& cols = sim_record_columns();
  for (std::size_t n = 0; n < cols.size(); ++n) os << (n ? "," : "") << cols[n];
  os << '\n';
}

void write_csv_row(std::ostream& os, const SimRecord& r) {
  std::string per_rx;
  for (std::size_t n = 0; n < r.rinr_per_rx.size(); ++n) per_rx += (n ? ";" : "") + format_double(r.rinr_per_rx[n]);
  os << r.scheme << ',' << format_double(r.snr_db) << ',' << r.budget << ',' << format_double(r.eps) << ','
     << format_double(r.delta2) << ',' << r.trials << ',' << format_double(r.mean_rinr) << ','
     << format_double(r.rinr_hw) << ',' << per_rx << ',' << format_double(r.mean_r_lim) << ','
     << format_double(r.r_lim_hw) << ',' << format_double(r.r_per) << ',' << format_double(r.r_low) << ','
     << format_double(r.r_low_conventional) << ',' << format_double(r.i_upp) << ',' << r.not_converged << ','
     << r.seed << '\n';
}

const std::vector<TrialOutcome>& SweepResult::at(std::size_t point, Scheme s) const {
  for (std::size_t n = 0; n < schemes.size(); ++n)
    if (schemes[n] == s) return outcomes.at(point)[n];
  throw Error(ErrorKind::InvalidArgument, std::string("scheme not simulated: ") + to_string(s));
}

int SweepResult::not_converged() const {
  int n = 0;
  for (const auto& r : records) n += r.not_converged;
  return n;
}

std::vector<LinkQuantStats> link_quant_stats(const Itp& itp, int beta_samples, std::uint64_t seed) {
  BetaCache cache(beta_samples, seed);
  return stats_with_beta(itp, cache);
}

std::vector<SweepPoint> make_points(const ScenarioConfig& c, std::optional<SweepAxis> axis) {
  std::vector<SweepPoint> pts;
  const SweepPoint base{c.snr_db.front(), c.budgets.front(), c.eps, c.delta2};
  if (!axis) {
    for (double s : c.snr_db)
      for (int b : c.budgets) pts.push_back({s, b, c.eps, c.delta2});
    return pts;
  }
  if ((*axis == SweepAxis::Correlation || *axis == SweepAxis::Shadowing) && c.itp)
    throw Error(ErrorKind::InvalidArgument, "correlation and shadowing sweeps need the random topology model");
  switch (*axis) {
    case SweepAxis::Bits:
      for (int b : c.budgets) pts.push_back({base.snr_db, b, base.eps, base.delta2});
      break;
    case SweepAxis::Snr:
      for (double s : c.snr_db) pts.push_back({s, base.budget, base.eps, base.delta2});
      break;
    case SweepAxis::SnrScaled: {
      // Ranks and connectivity do not depend on the shadowing draw.
      const Itp ref = c.itp ? *c.itp
                            : random_itp_from_normals(c.dims, c.eps, c.delta2,
                                                      std::vector<double>(c.dims.cross_links(), 0.0));
      std::vector<LinkQuantStats> stats;
      for (const LinkId& id : cross_link_ids(c.dims.k)) {
        const LinkStats& s = ref.link(id.j, id.i);
        stats.push_back({id, 1.0, s.l, s.m_r, s.m_t});
      }
      for (double s : c.snr_db)
        pts.push_back({s, scaling_bits(std::max(1.0, db_to_linear(s)), stats, c.c_b), base.eps, base.delta2});
      break;
    }
    case SweepAxis::Correlation: {
      const double phase = std::abs(c.eps) > 0.0 ? std::arg(c.eps) : 0.0;
      for (double e : c.eps_values) {
        if (std::abs(e) >= 1.0) throw Error(ErrorKind::CorrelationNotPSD, "|eps| must be < 1");
        pts.push_back({base.snr_db, base.budget, std::polar(e, phase), base.delta2});
      }
      break;
    }
    case SweepAxis::Shadowing:
      for (double d2 : c.delta2_values) {
        if (d2 < 0.0) throw Error(ErrorKind::InvalidArgument, "delta2 must be >= 0");
        pts.push_back({base.snr_db, base.budget, base.eps, d2});
      }
      break;
  }
  return pts;
}

SweepResult run_sweep(const ScenarioConfig& c, const std::vector<SweepPoint>& points) {
  c.validate();
  const SystemDims& dims = c.dims;
  const int k = dims.k;
  const int cap = c.codebook.exhaustive_max_bits;
  const std::vector<LinkId> ids = cross_link_ids(k);
  const std::size_t n_links = ids.size();
  const double nn = static_cast<double>(dims.nr) * dims.nt;

  // Trial-independent context per point.
  BetaCache betas(c.beta_samples, derive_seed(c.seed, {tag(Stream::Beta)}));
  std::vector<PointContext> ctx(points.size());
  const std::vector<double> zero_normals(n_links, 0.0);
  for (std::size_t pi = 0; pi < points.size(); ++pi) {
    PointContext& pc = ctx[pi];
    pc.p = db_to_linear(points[pi].snr_db);
    pc.r_per = throughput_perfect(pc.p, dims.d, k);
    const Itp ref = point_topology(c, points[pi], zero_normals);
    pc.stats = stats_with_beta(ref, betas);
    for (const LinkId& id : ids) {
      const LinkStats& s = ref.link(id.j, id.i);
      pc.phi_r.push_back(s.phi_r);
      pc.phi_t.push_back(s.phi_t);
      std::shared_ptr<HighResolutionQuantizer> q;
      // Links sharing statistics share one quantizer.
      for (std::size_t n = 0; n < pc.spatial_hrq.size() && !q; ++n)
        if (pc.phi_r[n] == s.phi_r && pc.phi_t[n] == s.phi_t) q = pc.spatial_hrq[n];
      pc.spatial_hrq.push_back(q ? q : std::make_shared<HighResolutionQuantizer>(s.phi_r, s.phi_t));
    }
  }
  const HighResolutionQuantizer base_hrq(dims.nr, dims.nt);

  SweepResult res;
  res.points = points;
  res.schemes = c.schemes;
  res.outcomes.assign(points.size(), std::vector<std::vector<TrialOutcome>>(
                                         c.schemes.size(), std::vector<TrialOutcome>(c.trials)));

  bool need_dynamic = false;
  for (Scheme s : c.schemes) need_dynamic = need_dynamic || uses_dynamic_bits(s);

#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < c.trials; ++t) {
    const auto ut = static_cast<std::uint64_t>(t);
    const std::vector<double> normals = shadowing_normals(c, t);
    const std::uint64_t channel_seed = derive_seed(c.seed, {tag(Stream::Channel), ut});

    // Topologies and allocations for every point, then the largest
    // enumerated codebook each link needs.
    std::vector<Itp> itps;
    std::vector<SchemePlan> plans;
    std::vector<int> base_bits(n_links, -1);
    for (std::size_t pi = 0; pi < points.size(); ++pi) {
      itps.push_back(point_topology(c, points[pi], normals));
      SchemePlan plan;
      plan.stats = ctx[pi].stats;
      for (std::size_t n = 0; n < n_links; ++n) plan.stats[n].l = itps.back().link(ids[n].j, ids[n].i).l;
      plan.equal = equal_allocation(points[pi].budget, ids);
      if (need_dynamic) plan.dynamic = allocate_bits(plan.stats, points[pi].budget);
      for (Scheme s : c.schemes) {
        if (s == Scheme::RB || s == Scheme::Perfect) continue;
        const BitAllocation& a = uses_dynamic_bits(s) ? plan.dynamic : plan.equal;
        for (std::size_t n = 0; n < n_links; ++n)
          if (a.bits[n] <= cap) base_bits[n] = std::max(base_bits[n], a.bits[n]);
      }
      plans.push_back(std::move(plan));
    }
    std::vector<std::shared_ptr<const BaseCodebook>> books(n_links);
    for (std::size_t n = 0; n < n_links; ++n) {
      if (base_bits[n] < 0) continue;
      const std::uint64_t cb_seed =
          c.codebook.fixed ? derive_seed(c.seed, {tag(Stream::Codebook), n})
                           : derive_seed(c.seed, {tag(Stream::Codebook), ut, n});
      books[n] = std::make_shared<const BaseCodebook>(
          gen_base_codebook(dims.nr, dims.nt, base_bits[n], cb_seed, c.codebook.max_bits));
    }

    for (std::size_t pi = 0; pi < points.size(); ++pi) {
      const Itp& itp = itps[pi];
      const PointContext& pc = ctx[pi];
      const SchemePlan& plan = plans[pi];
      Rng ch_rng(channel_seed);
      ChannelRealization ch = sample_channel(itp, ch_rng);
      ch.seed_tag = channel_seed;

      std::vector<std::unique_ptr<SpatialCodebook>> spatial(n_links);
      IaOptions ia = c.ia;
      ia.init_seed = derive_seed(c.seed, {tag(Stream::IaInit), ut});

      for (std::size_t si = 0; si < c.schemes.size(); ++si) {
        const Scheme scheme = c.schemes[si];
        TrialOutcome& out = res.outcomes[pi][si][static_cast<std::size_t>(t)];
        TransceiverSet ts;
        if (scheme == Scheme::RB) {
          Rng rng = make_rng(c.seed, {tag(Stream::RandomBeam), ut});
          ts = random_transceivers(dims, rng);
        } else if (scheme == Scheme::Perfect) {
          const IaResult r = compute_ia(cross_links(k, ch.h, itp, pc.p, dims.d), dims, ia);
          ts = r.ts;
          out.converged = r.converged;
        } else {
          const bool spatial_cb = uses_spatial_codebook(scheme);
          const BitAllocation& alloc = uses_dynamic_bits(scheme) ? plan.dynamic : plan.equal;
          std::vector<CMatrix> h_hat(static_cast<std::size_t>(k) * k);
          for (std::size_t n = 0; n < n_links; ++n) {
            const LinkId& id = ids[n];
            const CMatrix& h = ch.at(id.j, id.i);
            const int bits = alloc.bits[n];
            CMatrix dir;
            if (bits <= cap) {
              const std::size_t prefix = std::size_t{1} << bits;
              if (spatial_cb) {
                if (!spatial[n])
                  spatial[n] = std::make_unique<SpatialCodebook>(transform_codebook(
                      books[n], pc.phi_r[n], pc.phi_t[n], std::size_t{1} << base_bits[n]));
                dir = quantize(h, spatial[n]->words, prefix).h_hat;
              } else {
                dir = quantize(h, books[n]->words, prefix).h_hat;
              }
            } else {
              Rng q_rng = make_rng(c.seed, {tag(Stream::Quantizer), ut, n});
              dir = (spatial_cb ? *pc.spatial_hrq[n] : base_hrq).quantize(h, bits, q_rng).h_hat;
            }
            // Only the direction is fed back; the statistical norm
            // sqrt(E||H||^2) restores the scale for the leakage weights.
            h_hat[link_index(k, id.j, id.i)] = std::sqrt(nn) * dir;
          }
          const IaResult r = compute_ia(cross_links(k, std::move(h_hat), itp, pc.p, dims.d), dims, ia);
          ts = r.ts;
          out.converged = r.converged;
          if (c.bounds && spatial_cb) {
            const BoundReport b = bound_report(alloc, plan.stats, pc.p, dims.d, k);
            out.r_low = b.r_low;
            out.r_low_conventional = b.r_low_conventional;
            out.i_upp = b.i_upp;
          }
        }
        if (!(c.bounds && uses_spatial_codebook(scheme))) {
          out.r_low = kNaN;
          out.r_low_conventional = kNaN;
        }
        out.sample = evaluate(ts, ch, itp, pc.p);
      }
    }
  }

  for (std::size_t pi = 0; pi < points.size(); ++pi) {
    for (std::size_t si = 0; si < c.schemes.size(); ++si) {
      const auto& trials = res.outcomes[pi][si];
      SimRecord r;
      r.scheme = to_string(c.schemes[si]);
      r.snr_db = points[pi].snr_db;
      r.budget = points[pi].budget;
      r.eps = std::abs(points[pi].eps);
      r.delta2 = c.itp ? kNaN : points[pi].delta2;
      if (c.itp) r.eps = kNaN;
      r.trials = c.trials;
      std::vector<double> rinr, rate, low, low_conv, iupp;
      r.rinr_per_rx.assign(static_cast<std::size_t>(k), 0.0);
      for (const TrialOutcome& o : trials) {
        rinr.push_back(o.sample.mean_rinr());
        rate.push_back(o.sample.total_rate());
        for (int j = 0; j < k; ++j) r.rinr_per_rx[static_cast<std::size_t>(j)] += o.sample.rinr[static_cast<std::size_t>(j)];
        low.push_back(o.r_low);
        low_conv.push_back(o.r_low_conventional);
        if (!o.i_upp.empty()) iupp.push_back(mean_of(o.i_upp));
        if (!o.converged) ++r.not_converged;
      }
      for (double& x : r.rinr_per_rx) x /= c.trials;
      const Summary sr = summarize(rinr);
      const Summary st = summarize(rate);
      r.mean_rinr = sr.mean;
      r.rinr_hw = sr.half_width();
      r.mean_r_lim = st.mean;
      r.r_lim_hw = st.half_width();
      r.r_per = ctx[pi].r_per;
      r.r_low = mean_of(low);
      r.r_low_conventional = mean_of(low_conv);
      r.i_upp = iupp.empty() ? kNaN : mean_of(iupp);
      r.seed = c.seed;
      res.records.push_back(std::move(r));
    }
  }
  return res;
}

Itp table1_topology() {
  const SystemDims dims{4, 3, 2, 1};
  Itp itp = Itp::homogeneous(dims);
  CMatrix phi_t = CMatrix::Zero(3, 3);
  phi_t.diagonal() << 2.8, 0.1, 0.1;
  itp.link(0, 2) = LinkStats::make(CMatrix::Identity(2, 2), phi_t, 1.0);
  itp.link(0, 3) = LinkStats::make(CMatrix::Identity(2, 2), CMatrix::Identity(3, 3), 0.1);
  itp.validate();
  return itp;
}

Table1Result table1_experiment(int trials, std::uint64_t seed, const std::vector<int>& budgets,
                               const IaOptions& ia_opts) {
  if (trials < 1) throw Error(ErrorKind::InvalidArgument, "trials must be >= 1");
  if (budgets.empty()) throw Error(ErrorKind::InvalidArgument, "no budgets");
  const Itp itp = table1_topology();
  const SystemDims dims = itp.dims();
  const double p = 1.0;
  const int k = dims.k;
  const int max_budget = *std::max_element(budgets.begin(), budgets.end());
  for (int b : budgets)
    if (b < 0 || b % 2 != 0) throw Error(ErrorKind::InvalidArgument, "toy budgets must be even and >= 0");
  const LinkStats& s13 = itp.link(0, 2);
  const double nn = static_cast<double>(dims.nr) * dims.nt;

  Table1Result res;
  res.budgets = budgets;
  res.trials = trials;
  res.conventional.assign(budgets.size(), std::vector<double>(static_cast<std::size_t>(trials)));
  res.dynamic = res.conventional;
  std::vector<int> failures(static_cast<std::size_t>(trials), 0);

#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < trials; ++t) {
    const auto ut = static_cast<std::uint64_t>(t);
    Rng ch_rng = make_rng(seed, {tag(Stream::Table1), tag(Stream::Channel), ut});
    const ChannelRealization ch = sample_channel(itp, ch_rng);
    // Fresh nested codebooks per trial; smaller budgets use prefixes.
    const auto book13 = std::make_shared<const BaseCodebook>(gen_base_codebook(
        dims.nr, dims.nt, max_budget, derive_seed(seed, {tag(Stream::Table1), tag(Stream::Codebook), ut, 2})));
    const BaseCodebook book14 = gen_base_codebook(
        dims.nr, dims.nt, max_budget / 2, derive_seed(seed, {tag(Stream::Table1), tag(Stream::Codebook), ut, 3}));
    const SpatialCodebook spatial13 = transform_codebook(book13, s13.phi_r, s13.phi_t);
    IaOptions ia = ia_opts;
    ia.init_seed = derive_seed(seed, {tag(Stream::Table1), tag(Stream::IaInit), ut});

    auto run = [&](const CMatrix& h13, const CMatrix& h14) {
      std::vector<CMatrix> h = ch.h;
      h[link_index(k, 0, 2)] = std::sqrt(nn) * h13;
      h[link_index(k, 0, 3)] = std::sqrt(nn) * h14;
      const IaResult r = compute_ia(cross_links(k, std::move(h), itp, p, dims.d), dims, ia);
      if (!r.converged) ++failures[static_cast<std::size_t>(t)];
      return rinr(r.ts, ch, itp, p, 0);
    };
    for (std::size_t bi = 0; bi < budgets.size(); ++bi) {
      const int b = budgets[bi];
      const std::size_t half = std::size_t{1} << (b / 2);
      res.conventional[bi][static_cast<std::size_t>(t)] =
          run(quantize(ch.at(0, 2), book13->words, half).h_hat, quantize(ch.at(0, 3), book14.words, half).h_hat);
      res.dynamic[bi][static_cast<std::size_t>(t)] = run(quantize(ch.at(0, 2), spatial13.words, std::size_t{1} << b).h_hat,
                                                         quantize(ch.at(0, 3), book14.words, 1).h_hat);
    }
  }
  for (int f : failures) res.not_converged += f;

  for (std::size_t bi = 0; bi < budgets.size(); ++bi) {
    for (int which = 0; which < 2; ++which) {
      const auto& x = which == 0 ? res.conventional[bi] : res.dynamic[bi];
      const Summary s = summarize(x);
      SimRecord r;
      r.scheme = which == 0 ? "CVQ" : "DFS";
      r.snr_db = 0.0;
      r.budget = budgets[bi];
      r.eps = kNaN;
      r.delta2 = kNaN;
      r.trials = trials;
      r.mean_rinr = s.mean;
      r.rinr_hw = s.half_width();
      r.rinr_per_rx = {s.mean};
      r.mean_r_lim = kNaN;
      r.r_lim_hw = kNaN;
      r.r_per = kNaN;
      r.r_low = kNaN;
      r.r_low_conventional = kNaN;
      r.i_upp = kNaN;
      r.seed = seed;
      res.records.push_back(std::move(r));
    }
  }
  return res;
}

Summary summarize(const std::vector<double>& x) {
  Summary s;
  s.n = x.size();
  if (x.empty()) return s;
  s.mean = mean_of(x);
  if (x.size() > 1) {
    double ss = 0.0;
    for (double v : x) ss += (v - s.mean) * (v - s.mean);
    s.std_error = std::sqrt(ss / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
  }
  return s;
}

Summary summarize_paired(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error(ErrorKind::DimensionMismatch, "paired samples differ in length");
  std::vector<double> d(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) d[n] = x[n] - y[n];
  return summarize(d);
}

nlohmann::json run_metadata(const nlohmann::json& config_echo, const std::string& command, int not_converged) {
  return {{"command", command},
          {"config", config_echo},
          {"versions",
           {{"lfia", kVersion},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"compiler", __VERSION__}}},
          {"columns", sim_record_columns()},
          {"not_converged", not_converged}};
}

}  // namespace lfia
