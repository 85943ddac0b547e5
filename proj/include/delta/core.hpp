#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace delta {

/// Node index, 0-based.
using NodeId = int;

/// Age measured in slots.
using Age = std::int64_t;

/// Random source used everywhere in the simulator.
using Rng = std::mt19937_64;

/// Uniform draw in [0,1).
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

/// Independent substream `stream` of the episode seed.
Rng make_stream(std::uint64_t seed, std::uint64_t stream);

/// System-wide parameters: node count, per-node activation and uplink
/// erasure probabilities.
class SystemParams {
 public:
  SystemParams(std::vector<double> lambda, std::vector<double> epsilon);

  /// Homogeneous system with N nodes.
  static SystemParams symmetric(int n, double lambda, double epsilon);
  /// Homogeneous system with total offered load rho spread over N nodes.
  static SystemParams from_load(int n, double rho, double epsilon);

  int n() const { return static_cast<int>(lambda_.size()); }
  const std::vector<double>& lambda() const { return lambda_; }
  const std::vector<double>& epsilon() const { return epsilon_; }
  double lambda(NodeId id) const { return lambda_[id]; }
  double epsilon(NodeId id) const { return epsilon_[id]; }
  /// Offered load, the sum of activation probabilities.
  double rho() const;
  double mean_lambda() const { return rho() / n(); }
  double mean_epsilon() const;

 private:
  std::vector<double> lambda_;
  std::vector<double> epsilon_;
};

/// Ground truth for one sensor: anomaly state, AoI and AoII.
struct NodeRecord {
  NodeId id = 0;
  bool x = false;
  Age delta = 0;
  Age theta = 0;

  bool operator==(const NodeRecord&) const = default;
};

/// One slot of the two-state anomaly chain. State 1 is absorbing here; it is
/// cleared only by update_ages on a successful report. A uniform is drawn on
/// every call so that activation sample paths do not depend on the protocol.
bool step_anomaly(bool x, double lambda, Rng& rng);

/// End-of-slot age accounting.
NodeRecord update_ages(NodeRecord rec, bool success);

inline bool violation_indicator(Age theta, Age theta_max) { return theta > theta_max; }

}  // namespace delta
