#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "delta/sim.hpp"
#include "delta/smm.hpp"
#include "delta/tuning.hpp"

namespace delta {

// ---------------------------------------------------------------------------
// Plain key = value configuration with [section] headers.

struct ConfigSection {
  std::string name;
  std::vector<std::pair<std::string, std::string>> entries;

  std::optional<std::string> get(const std::string& key) const;
};

/// Keys before the first header land in a section named "". Lines starting
/// with '#' or ';' are comments. Duplicate keys keep the last value.
std::vector<ConfigSection> parse_config(const std::string& text);
std::vector<ConfigSection> load_config(const std::filesystem::path& path);

/// "0.1, 0.2" or an inclusive range "start:stop:step".
std::vector<double> parse_values(const std::string& text);

// ---------------------------------------------------------------------------
// Sweeps.

enum class SweepAxis { Rho, N, Nu, SigmaF, EpsilonF, OmegaF, K };

std::string to_string(SweepAxis axis);
SweepAxis axis_from_string(const std::string& name);

/// How a DELTA entry picks K: the fixed value (or ceil(2.5 N)), or the
/// argmax of the semi-Markov pi(ZW) under one model variant.
enum class KMode { Fixed, Optimistic, Pessimistic };

/// One protocol in a sweep, e.g. "LZW", "DELTA+" or "DELTA:optimistic".
struct ProtocolEntry {
  std::string label;
  ProtocolKind kind = ProtocolKind::Delta;
  KMode k_mode = KMode::Fixed;

  static ProtocolEntry parse(const std::string& text);
};

struct SweepSpec {
  std::string name;
  SweepAxis axis = SweepAxis::Rho;
  std::vector<double> values;
  std::vector<ProtocolEntry> protocols;

  int n = 20;
  double rho = 0.5;
  double epsilon = 0.05;
  FeedbackModel feedback;
  double k = 0.0;
  double nu = 0.0;
  int samples = 100;  // activation vectors per nu value
  std::int64_t slots = 1'000'000;
  std::uint64_t seed = 1;
  std::vector<Age> thresholds{0, 5};
  bool bt_p_adjust = true;
  /// Add semi-Markov pi(ZW) rows on a K sweep.
  bool model_curves = true;
  TuneBudget tune_budget;
  std::filesystem::path output;

  /// Builds a spec from a config section. Unknown keys are rejected.
  static SweepSpec from_section(const ConfigSection& section);
  void validate() const;
};

/// Scenario fields after the axis value is applied.
struct SweepPoint {
  int n = 20;
  double rho = 0.5;
  double epsilon = 0.05;
  FeedbackModel feedback;
  double k = 0.0;
  double nu = 0.0;
};

SweepPoint apply_axis(const SweepSpec& spec, double value);

struct SweepRow {
  std::string protocol;
  std::string axis;
  double value = 0.0;
  std::map<Age, double> violation;  // empty for model rows
  std::optional<double> mean_aoii;
  std::optional<double> mean_aoi;
  std::optional<double> pi_zw;
  std::uint64_t seed = 0;
  std::int64_t slots = 0;
};

/// Tuned baseline parameters keyed by scenario, persisted as JSON.
class TuneCache {
 public:
  TuneCache() = default;
  /// Loads the file if it exists; an empty path keeps the cache in memory.
  explicit TuneCache(std::filesystem::path path);

  std::optional<TuneResult> find(const std::string& key) const;
  void put(const std::string& key, const TuneResult& result);
  void save() const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::filesystem::path path_;
  std::map<std::string, TuneResult> entries_;
};

std::string tune_key(BaselineKind kind, const TuneScenario& scenario, const TuneBudget& budget);

/// Cached grid search. With a null cache every call re-tunes.
TuneResult tuned_baseline(BaselineKind kind, const TuneScenario& scenario,
                          const TuneBudget& budget, TuneCache* cache);

struct TunedEntry {
  BaselineKind kind;
  std::string scenario;
  TuneResult result;
};

/// Tunes every zero-wait baseline of the sweep at each axis value and threshold.
std::vector<TunedEntry> tune_baselines(const SweepSpec& spec, TuneCache* cache, int workers = 1);
void write_tune_table(const std::vector<TunedEntry>& entries, std::ostream& out);

struct SweepOptions {
  int workers = 1;
  TuneCache* cache = nullptr;
  /// Debug assertions on every DELTA episode; violations throw.
  bool debug_assertions = false;
};

/// Runs every (protocol, value) pair. Zero-wait baselines get one row per
/// threshold, tuned for that threshold and labelled "ZW@<threshold>".
std::vector<SweepRow> run_sweep(const SweepSpec& spec, const SweepOptions& options = {});

/// Columns: protocol, axis, value, V(thr) per threshold, mean_aoii, mean_aoi,
/// pi_zw, seed, slots. Missing values are left empty.
void write_csv(const std::vector<SweepRow>& rows, const std::vector<Age>& thresholds,
               std::ostream& out);
void write_csv(const std::vector<SweepRow>& rows, const std::vector<Age>& thresholds,
               const std::filesystem::path& path);

/// K chosen by the semi-Markov model; integer grid 2..6N. Memoized.
double model_k(int n, double lambda, double epsilon, SmmVariant variant, bool bt_p_adjust);

// ---------------------------------------------------------------------------
// Presets and analysis tables.

std::vector<std::string> preset_names();
/// Config text of a preset; throws on an unknown name.
std::string preset_config(const std::string& name);

/// Columns: variant, K, pi_zw, argmax (1 on the K each variant picks).
void write_smm_table(int n, double rho, double epsilon, const std::vector<double>& ks,
                     int psi_max, bool bt_p_adjust, std::ostream& out);

}  // namespace delta
