#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "delta/baselines.hpp"
#include "delta/channel.hpp"
#include "delta/core.hpp"
#include "delta/protocol.hpp"

namespace delta {

enum class ProtocolKind { Delta, DeltaPlus, RR, MAF, ZW, LZW, GZW };

std::string to_string(ProtocolKind kind);
ProtocolKind protocol_from_string(const std::string& name);
bool is_delta(ProtocolKind kind);
BaselineKind baseline_kind(ProtocolKind kind);

/// Protocol choice plus its parameters.
struct ProtocolSpec {
  ProtocolKind kind = ProtocolKind::Delta;
  /// DELTA slot budget. Zero selects ceil(2.5 N).
  double k = 0.0;
  bool bt_p_adjust = true;
  /// Parameters DELTA is configured with; defaults to the true ones.
  std::optional<SystemParams> believed;
  /// p1/p2 for the zero-wait family.
  double p1 = 1.0;
  double p2 = 1.0;

  static ProtocolSpec delta(double k = 0.0, Variant variant = Variant::Delta);
  static ProtocolSpec baseline(const BaselineConfig& config);
  BaselineConfig baseline_config() const;
};

/// Default DELTA slot budget, ceil(5N/2).
double default_k(int n);

/// Snapshot handed to the per-slot observer.
struct SlotTrace {
  std::int64_t t = 0;
  SlotOutcome outcome;
  NodeId polled = -1;               // RR/MAF only
  std::optional<Phase> phase;       // DELTA gateway phase at slot start
  const std::vector<NodeRecord>* nodes = nullptr;  // after age update
  const std::vector<char>* transmitted = nullptr;
};

struct EpisodeConfig {
  SystemParams params = SystemParams::symmetric(1, 0.0, 0.0);
  ProtocolSpec protocol;
  FeedbackModel feedback;
  std::int64_t slots = 1'000'000;
  std::uint64_t seed = 1;
  std::vector<Age> thresholds{0, 5};
  /// Check, every slot under ideal feedback, that all DELTA nodes hold the
  /// same public view and that every AoII is within its public bound. Nodes
  /// then advance independently instead of sharing identical views.
  bool debug_assertions = false;
  /// Gateway phase / max-bound piggyback on ACK and NACK packets. Defaults to
  /// on for every non-ideal feedback model.
  std::optional<bool> piggyback;
  std::function<void(const SlotTrace&)> observer;

  void validate() const;
};

/// Per-episode metrics.
struct MetricsLedger {
  std::int64_t slots = 0;
  int n = 0;
  /// Fraction of node-slots with AoII above each threshold.
  std::map<Age, double> violation;
  std::map<Age, std::vector<double>> per_node_violation;
  double mean_aoii = 0.0;
  double mean_aoi = 0.0;
  /// Fraction of slots spent in each DELTA phase (gateway view).
  std::map<Phase, double> phase_occupancy;
  std::int64_t collisions = 0;  // failed slots, erasures included
  std::int64_t successes = 0;
  std::int64_t silent = 0;
  double psi_zw_fraction = 0.0;
  std::int64_t lockstep_violations = 0;
  std::int64_t bound_violations = 0;

  bool operator==(const MetricsLedger&) const = default;
};

/// Thrown when debug assertions detect a protocol invariant violation.
class InvariantViolation : public std::runtime_error {
 public:
  InvariantViolation(std::int64_t slot, std::vector<NodeId> nodes, const std::string& what);
  std::int64_t slot() const { return slot_; }
  const std::vector<NodeId>& nodes() const { return nodes_; }

 private:
  std::int64_t slot_;
  std::vector<NodeId> nodes_;
};

/// Runs one episode. Deterministic in (config, seed). Random streams: one
/// per node for activations, one per node for protocol decisions, one for
/// the uplink and one for the downlink, all derived from the seed.
MetricsLedger run_episode(const EpisodeConfig& config);

/// Like run_episode, but invariant violations are counted in the ledger
/// instead of thrown.
MetricsLedger run_episode_counting(const EpisodeConfig& config);

/// Mean and standard deviation of a violation metric across samples.
struct SpreadStat {
  double mean = 0.0;
  double stddev = 0.0;
};

struct HeterogeneityResult {
  std::map<Age, SpreadStat> violation;
  SpreadStat mean_aoii;
  std::vector<MetricsLedger> samples;
};

/// Samples `samples` activation vectors lambda_n ~ U((1-nu) rho/N, (1+nu) rho/N)
/// and runs the base configuration on each. DELTA stays configured with the
/// average vector rho/N. Sample i uses seed base.seed + i.
HeterogeneityResult run_heterogeneity_sweep(double rho, double nu, int samples,
                                            const EpisodeConfig& base, int workers = 1);

/// Runs independent episodes over a pool of worker threads; results keep the
/// input order.
std::vector<MetricsLedger> run_episodes(const std::vector<EpisodeConfig>& configs, int workers);

}  // namespace delta
