// Command-line front end: figure sweeps, baseline tuning, semi-Markov tables
// and optimal CR probability export.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "delta/cr_analysis.hpp"
#include "delta/experiment.hpp"
#include "delta/sim.hpp"
#include "delta/smm.hpp"

namespace fs = std::filesystem;
using namespace delta;

namespace {

struct SweepArgs {
  std::string config;
  std::string preset;
  std::string out = "results";
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> slots;
  int workers = 1;
  std::string cache;
  bool no_cache = false;
  bool debug = false;
};

void add_sweep_options(CLI::App* cmd, SweepArgs& a) {
  auto* src = cmd->add_option_group("source");
  src->add_option("--config", a.config, "Sweep file (key = value, one [section] per sweep)")
      ->check(CLI::ExistingFile);
  src->add_option("--preset", a.preset, "Built-in figure preset")
      ->check(CLI::IsMember(preset_names()));
  src->require_option(1);
  cmd->add_option("--seed", a.seed, "Override the seed of every sweep");
  cmd->add_option("--slots", a.slots, "Override the episode length")->check(CLI::PositiveNumber);
  cmd->add_option("--workers", a.workers, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--cache", a.cache, "Tuning cache file (default <out>/tuning_cache.json)");
  cmd->add_flag("--no-cache", a.no_cache, "Re-tune every baseline");
}

std::vector<SweepSpec> load_specs(const SweepArgs& a) {
  const auto sections =
      a.preset.empty() ? load_config(a.config) : parse_config(preset_config(a.preset));
  std::vector<SweepSpec> specs;
  for (const auto& section : sections) {
    SweepSpec s = SweepSpec::from_section(section);
    if (a.seed) s.seed = *a.seed;
    if (a.slots) s.slots = *a.slots;
    specs.push_back(std::move(s));
  }
  if (specs.empty()) throw std::invalid_argument("no sweeps defined");
  return specs;
}

std::optional<TuneCache> open_cache(const SweepArgs& a, const fs::path& out_dir) {
  if (a.no_cache) return std::nullopt;
  return TuneCache(a.cache.empty() ? out_dir / "tuning_cache.json" : fs::path(a.cache));
}

int run_sweep_cmd(const SweepArgs& a) {
  const fs::path out_dir = a.out;
  auto cache = open_cache(a, out_dir);
  SweepOptions options;
  options.workers = a.workers;
  options.cache = cache ? &*cache : nullptr;
  options.debug_assertions = a.debug;
  for (const auto& spec : load_specs(a)) {
    const fs::path path = spec.output.is_absolute() ? spec.output : out_dir / spec.output;
    std::cerr << "sweep " << spec.name << ": " << spec.values.size() << " values, "
              << spec.protocols.size() << " protocols -> " << path.string() << '\n';
    write_csv(run_sweep(spec, options), spec.thresholds, path);
  }
  return 0;
}

int run_tune_cmd(const SweepArgs& a) {
  const fs::path out_dir = a.out;
  auto cache = open_cache(a, out_dir);
  std::vector<TunedEntry> all;
  for (const auto& spec : load_specs(a)) {
    auto entries = tune_baselines(spec, cache ? &*cache : nullptr, a.workers);
    all.insert(all.end(), entries.begin(), entries.end());
  }
  fs::create_directories(out_dir);
  const fs::path path = out_dir / "tuned_baselines.csv";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_tune_table(all, out);
  std::cerr << all.size() << " tuned settings -> " << path.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DELTA anomaly-reporting MAC: simulation sweeps and analysis"};
  app.require_subcommand(1);

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run parameter sweeps and write CSV tables");
  add_sweep_options(sweep_cmd, sweep);
  sweep_cmd->add_option("--out", sweep.out, "Output directory");
  sweep_cmd->add_flag("--debug", sweep.debug, "Check DELTA invariants every slot");

  SweepArgs tune;
  auto* tune_cmd = app.add_subcommand("tune", "Grid-search the zero-wait baselines of a sweep");
  add_sweep_options(tune_cmd, tune);
  tune_cmd->add_option("--out", tune.out, "Output directory");

  int n = 20;
  double rho = 0.5;
  double epsilon = 0.05;
  double k_min = 2.0;
  std::optional<double> k_max;
  double k_step = 1.0;
  std::optional<int> psi_max;
  bool no_adjust = false;
  std::string out_file;

  auto* analyze_cmd = app.add_subcommand("analyze", "Semi-Markov pi(ZW) as a function of K");
  analyze_cmd->add_option("-N,--nodes", n, "Node count")->check(CLI::PositiveNumber);
  analyze_cmd->add_option("--rho", rho, "Offered load")->check(CLI::Range(0.0, 1.0));
  analyze_cmd->add_option("--epsilon", epsilon, "Uplink erasure probability")
      ->check(CLI::Range(0.0, 1.0));
  analyze_cmd->add_option("--k-min", k_min, "Smallest K");
  analyze_cmd->add_option("--k-max", k_max, "Largest K (default 6N)");
  analyze_cmd->add_option("--k-step", k_step, "K step")->check(CLI::PositiveNumber);
  analyze_cmd->add_option("--psi-max", psi_max, "Truncation (default 8N)");
  analyze_cmd->add_flag("--no-bt-p-adjust", no_adjust, "Reuse the ZW probabilities after BT");
  analyze_cmd->add_option("--out", out_file, "CSV file (default stdout)");

  auto* optp_cmd = app.add_subcommand("optimize-p", "Export optimal CR probabilities");
  optp_cmd->add_option("-N,--nodes", n, "Node count")->check(CLI::PositiveNumber);
  optp_cmd->add_option("--rho", rho, "Offered load")->check(CLI::Range(0.0, 1.0));
  optp_cmd->add_option("--epsilon", epsilon, "Uplink erasure probability")
      ->check(CLI::Range(0.0, 1.0));
  optp_cmd->add_option("--out", out_file, "Lookup table file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sweep_cmd->parsed()) return run_sweep_cmd(sweep);
    if (tune_cmd->parsed()) return run_tune_cmd(tune);

    if (analyze_cmd->parsed()) {
      std::vector<double> ks;
      const double top = k_max.value_or(6.0 * n);
      for (double k = k_min; k <= top + 1e-9; k += k_step) ks.push_back(k);
      const int psi = psi_max.value_or(default_psi_max(n));
      if (out_file.empty()) {
        write_smm_table(n, rho, epsilon, ks, psi, !no_adjust, std::cout);
      } else {
        std::ofstream out(out_file);
        if (!out) throw std::runtime_error("cannot write " + out_file);
        write_smm_table(n, rho, epsilon, ks, psi, !no_adjust, out);
      }
      return 0;
    }

    if (optp_cmd->parsed()) {
      auto& table = OptimalPTable::global();
      const auto p = table.vector_for(n, rho / n, epsilon);
      if (out_file.empty()) {
        std::cout << "round,N_i,p_star\n";
        for (std::size_t i = 0; i < p.size(); ++i)
          std::cout << i << ',' << n - static_cast<int>(i) << ',' << p[i] << '\n';
      } else {
        table.export_table(out_file);
      }
      return 0;
    }
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
