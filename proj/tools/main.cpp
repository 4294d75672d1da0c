#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "lfia/allocation.hpp"
#include "lfia/codebook.hpp"
#include "lfia/harness.hpp"
#include "lfia/kernels.hpp"

namespace {

using lfia::Error;
using lfia::ErrorKind;

constexpr int kExitNotConverged = 2;

// CSV goes to `out` (stdout when empty); the sidecar sits next to it.
int emit(const std::vector<lfia::SimRecord>& records, const std::string& out, const nlohmann::json& meta,
         int not_converged) {
  std::ostringstream csv;
  lfia::write_csv_header(csv);
  for (const auto& r : records) lfia::write_csv_row(csv, r);
  if (out.empty() || out == "-") {
    std::cout << csv.str();
  } else {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw Error(ErrorKind::InvalidArgument, "cannot write '" + out + "'");
    f << csv.str();
    std::ofstream m(out + ".json", std::ios::binary);
    m << meta.dump(2) << '\n';
  }
  if (not_converged > 0) {
    std::cerr << "warning: " << not_converged << " IA runs hit the iteration limit\n";
    return kExitNotConverged;
  }
  return 0;
}

std::vector<lfia::LinkQuantStats> read_stats_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Parse, "cannot open '" + path + "'");
  std::vector<lfia::LinkQuantStats> stats;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    lfia::LinkQuantStats s;
    if (!(ls >> s.id.j)) continue;
    if (!(ls >> s.id.i >> s.beta >> s.l >> s.m_r >> s.m_t))
      throw Error(ErrorKind::Parse, path + ":" + std::to_string(lineno) + ": expected 'j i beta l m_r m_t'");
    stats.push_back(s);
  }
  return stats;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Parse, "cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, path + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Limited-feedback interference alignment simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", lfia::kVersion);

  std::string config_path, out_path, axis_name, stats_path;
  int trials = 10000, budget = 0, samples = 100000;
  std::uint64_t seed = 1;
  double gain_floor = lfia::kDefaultGainFloor;

  auto* simulate = app.add_subcommand("simulate", "Run every scheme over the snr x budget grid of a config");
  simulate->add_option("config", config_path, "Scenario config (JSON)")->required()->check(CLI::ExistingFile);
  simulate->add_option("-o,--out", out_path, "CSV output path (default: config 'output', else stdout)");

  auto* table1 = app.add_subcommand("table1", "Mean RINR of the four-pair toy network");
  table1->add_option("--trials", trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
  table1->add_option("--seed", seed, "Master seed");
  table1->add_option("-o,--out", out_path, "CSV output path (default stdout)");

  auto* sweep = app.add_subcommand("sweep", "Sweep one parameter axis");
  sweep->add_option("config", config_path, "Scenario config (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--axis", axis_name, "bits|snr|snr-scaled|correlation|shadowing")
      ->required()
      ->check(CLI::IsMember({"bits", "snr", "snr-scaled", "correlation", "shadowing"}));
  sweep->add_option("-o,--out", out_path, "CSV output path (default: config 'output', else stdout)");

  auto* alloc = app.add_subcommand("alloc", "Water-filling bit allocation for a link table");
  alloc->add_option("stats", stats_path, "Text table: j i beta l m_r m_t per line, # comments")
      ->required()
      ->check(CLI::ExistingFile);
  alloc->add_option("--budget", budget, "Sum feedback bits")->required()->check(CLI::NonNegativeNumber);
  alloc->add_option("--gain-floor", gain_floor, "Gains at or below this count as disconnected");

  auto* beta = app.add_subcommand("beta", "Distortion coefficient of one link");
  beta->add_option("link", stats_path, "Link stats JSON with phi_r and phi_t")->required()->check(CLI::ExistingFile);
  beta->add_option("--samples", samples, "Monte Carlo samples")->check(CLI::Range(10000, 1 << 30));
  beta->add_option("--seed", seed, "Seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate || *sweep) {
      lfia::ScenarioConfig c = lfia::load_config(config_path);
      std::optional<lfia::SweepAxis> axis;
      if (*sweep) axis = lfia::axis_from_string(axis_name);
      const auto points = lfia::make_points(c, axis);
      const lfia::SweepResult res = lfia::run_sweep(c, points);
      const std::string command = *sweep ? "sweep --axis " + axis_name : "simulate";
      const int nc = res.not_converged();
      return emit(res.records, out_path.empty() ? c.output : out_path, lfia::run_metadata(lfia::to_json(c), command, nc),
                  nc);
    }
    if (*table1) {
      const lfia::Table1Result res = lfia::table1_experiment(trials, seed);
      const nlohmann::json echo = {{"trials", trials}, {"seed", seed}, {"budgets", res.budgets}};
      return emit(res.records, out_path, lfia::run_metadata(echo, "table1", res.not_converged), res.not_converged);
    }
    if (*alloc) {
      const auto stats = read_stats_table(stats_path);
      const lfia::BitAllocation a = lfia::allocate_bits(stats, budget, gain_floor);
      std::printf("# water_level %.12g\n", a.water_level);
      std::printf("# objective %.12g\n", lfia::allocation_objective(stats, a.bits, gain_floor));
      std::printf("j,i,bits,real_bits\n");
      for (std::size_t n = 0; n < stats.size(); ++n)
        std::printf("%d,%d,%d,%.10g\n", a.links[n].j, a.links[n].i, a.bits[n], a.real_bits[n]);
      return 0;
    }
    if (*beta) {
      const lfia::LinkStats s = lfia::link_stats_from_json(read_json(stats_path));
      const lfia::BetaEstimate b = lfia::distortion_coefficient_beta(s.phi_r, s.phi_t, samples, seed);
      std::printf("beta,std_error,m_r,m_t\n%.10g,%.10g,%d,%d\n", b.value, b.std_error, b.m_r, b.m_t);
      return 0;
    }
  } catch (const lfia::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
