#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace delta {

enum class SmmVariant { Pessimistic, Optimistic };

std::string to_string(SmmVariant variant);

/// Slot budget matching a belief threshold F: log F / log(1 - lambda).
double k_from_threshold(double f, double lambda);

/// Collision probability of a BT slot with L active nodes, each transmitting
/// with alpha = 1 - (1 - lambda)^(K/L).
double collision_prob_bt(double k, double l, double lambda, double epsilon);

/// Collision probability of a ZW slot: every node reports its own activation.
double collision_prob_zw(int n, double lambda, double epsilon);

/// E[C | psi]: expected number of colliders of a ZW-born cycle whose length
/// was psi slots.
double expected_colliders(int n, double lambda, double epsilon, std::span<const double> p, int psi);

/// Number of nodes competing in BT(psi).
double active_nodes(int psi, SmmVariant variant, int n, double lambda, double epsilon,
                    std::span<const double> p);

struct SmmOptions {
  /// Optimize the CR probabilities of BT-born cycles for their own
  /// activation probability instead of reusing the ZW vector.
  bool bt_p_adjust = true;
};

/// States: ZW, CR(0..Psi), BT(1..Psi).
struct SemiMarkovModel {
  int n = 0;
  double lambda = 0.0;
  double epsilon = 0.0;
  double k = 0.0;
  int psi_max = 0;
  SmmVariant variant = SmmVariant::Pessimistic;

  Eigen::MatrixXd m;  // transition probabilities
  Eigen::MatrixXd t;  // expected sojourn per transition
  std::vector<double> active;     // L(psi), psi = 0..Psi (entry 0 unused)
  std::vector<double> collision;  // xi(psi); entry 0 is the ZW value

  int size() const { return 2 * psi_max + 2; }
  static int zw() { return 0; }
  int cr(int psi) const { return 1 + psi; }
  int bt(int psi) const { return psi_max + 1 + psi; }
  std::string state_name(int s) const;
};

/// Default truncation 8N.
int default_psi_max(int n);

SemiMarkovModel build_model(int n, double lambda, double epsilon, double k, int psi_max,
                            SmmVariant variant, const SmmOptions& options = {});

struct SteadyState {
  std::vector<double> alpha;  // embedded chain
  std::vector<double> pi;     // time fraction
  double residual = 0.0;
};

/// Stationary law of a semi-Markov process with transition matrix m and
/// expected sojourn matrix t. Throws std::runtime_error when the linear
/// solve leaves a residual above 1e-12.
SteadyState steady_state(const Eigen::MatrixXd& m, const Eigen::MatrixXd& t);
SteadyState steady_state(const SemiMarkovModel& model);

/// pi(ZW) of the model, 1 when no collision can ever happen.
double pi_zw(int n, double lambda, double epsilon, double k, int psi_max, SmmVariant variant,
             const SmmOptions& options = {});

struct KOptimum {
  double k = 0.0;
  double pi_zw = 0.0;
  std::vector<std::pair<double, double>> curve;  // (K, pi(ZW))
};

/// argmax of pi(ZW) over k_range, ties to the smaller K.
KOptimum optimize_k(int n, double lambda, double epsilon, int psi_max, SmmVariant variant,
                    std::span<const double> k_range, const SmmOptions& options = {});

struct StabilityReport {
  double tail = 0.0;          // mass of CR(psi), BT(psi) for psi > Psi/2
  double tail_doubled = 0.0;  // same with 2 Psi
  double pi_zw = 0.0;
  double pi_zw_doubled = 0.0;
  bool unstable = false;
};

/// Unstable when the mass in the upper half of the psi range does not at
/// least halve as the truncation doubles.
StabilityReport stability_check(int n, double lambda, double epsilon, double k, int psi_max,
                                SmmVariant variant, const SmmOptions& options = {});

}  // namespace delta
