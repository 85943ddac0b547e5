#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <tuple>
#include <vector>

namespace delta {

/// Binomial pmf Bin(k; n, p).
double binomial_pmf(int k, int n, double p);

/// Probability that exactly one of c colliders transmits, each with
/// probability p, and the packet survives erasure.
double success_prob(int c, double p, double epsilon);

/// Mean length of a collision-resolution cycle (CR and CE slots, the slot of
/// the initial collision excluded) that starts from c colliders. p[i] is the
/// transmission probability of the (i+1)-th CR phase. Throws
/// std::invalid_argument when a needed probability is zero.
double expected_cycle_duration(int c, std::span<const double> p, double epsilon);

/// Absorbing chain of the CR phases of one cycle. States 0..c-1 are the
/// successive CR phases (state i holds c-i colliders and uses p[i]); state c
/// absorbs. The collision set never grows, so the transient block is upper
/// bidiagonal.
class PhaseTypeModel {
 public:
  PhaseTypeModel(int c, std::span<const double> p, double epsilon);

  int colliders() const { return c_; }
  double epsilon() const { return epsilon_; }
  const std::vector<double>& p() const { return p_; }
  int size() const { return c_ + 1; }
  /// Row-major (c+1)x(c+1) transition matrix.
  const std::vector<double>& transition() const { return matrix_; }
  double at(int i, int j) const { return matrix_[static_cast<std::size_t>(i) * size() + j]; }

  /// Law of the number of CR slots needed to bring the collision set down to
  /// a single node (hitting time of state c-1), for t = 0..t_max. Computed by
  /// stepping the first row of P^t.
  std::vector<double> reduction_pmf(int t_max) const;

  /// Law of the full cycle length, t = 0..t_max: the CR slots, the c-1 CE
  /// slots, and the singleton retry cycle that follows an erased final CE.
  std::vector<double> cycle_pmf(int t_max) const;

 private:
  int c_;
  double epsilon_;
  std::vector<double> p_;
  std::vector<double> matrix_;
};

/// P(cycle length <= t) for c colliders.
double cycle_duration_cdf(int c, std::span<const double> p, double epsilon, int t);

/// Unnormalized collider-count mass out of ZW, indexed 0..N, together with
/// the total failure probability p_f(ZW).
struct ColliderMass {
  std::vector<double> mass;
  double p_fail = 0.0;

  /// mass / p_fail.
  std::vector<double> conditional() const;
};

ColliderMass collider_count_pmf_zw(int n, double lambda, double epsilon);

/// pmf of the cycle length after a failure out of ZW, t = 0..t_max.
std::vector<double> cycle_pmf_mixture(int n, double lambda, double epsilon,
                                      std::span<const double> p, int t_max);

/// CDF of the cycle length after a failure out of ZW.
double cycle_cdf_mixture(int n, double lambda, double epsilon, std::span<const double> p, int t);

/// Expected-duration objective of one CR phase that may hold up to n_i
/// colliders, as a function of its transmission probability (the constant
/// 1/(1-epsilon) factor dropped).
double cr_phase_objective(int n_i, double lambda, double epsilon, double p);

/// Stationarity condition of cr_phase_objective, multiplied by p^2. Positive
/// below the optimum, negative above it.
double cr_phase_derivative_condition(int n_i, double lambda, double epsilon, double p);

/// Optimal transmission probability of a CR phase with up to n_i colliders.
double optimal_p_phase(int n_i, double lambda, double epsilon);

/// Optimal transmission probability vector, entry i for the (i+1)-th CR
/// phase (n_i = N - i possible colliders); the last entry is 1.
std::vector<double> optimal_p_static(int n, double lambda, double epsilon);

/// Thread-safe cache of optimal_p_phase keyed by (n_i, lambda, epsilon)
/// rounded to 1e-6.
class OptimalPTable {
 public:
  double lookup(int n_i, double lambda, double epsilon);
  std::vector<double> vector_for(int n, double lambda, double epsilon);
  std::size_t size() const;
  /// Columns: N_i, lambda, epsilon, p*.
  void export_table(const std::filesystem::path& path) const;

  static OptimalPTable& global();

 private:
  using Key = std::tuple<int, long long, long long>;
  mutable std::shared_mutex mutex_;
  std::map<Key, double> table_;
};

/// Posterior over the number of colliders still in the collision set.
struct ColliderBelief {
  std::vector<double> phi;  // indexed by collider count 0..N
  int round = 0;

  bool operator==(const ColliderBelief&) const = default;
};

enum class BeliefEvent { AckCR, SilentCR, NackCR, NackCE };

ColliderBelief deltaplus_prior(int n, double lambda, double epsilon);

/// Bayes update of the belief for one public event; p_j is the transmission
/// probability used in that slot (ignored for NackCE). Returns nullopt when
/// the event has zero likelihood under the belief.
std::optional<ColliderBelief> try_deltaplus_update(const ColliderBelief& belief, BeliefEvent event,
                                                   double p_j, double epsilon);

/// As try_deltaplus_update, but throws std::domain_error on a degenerate
/// posterior.
ColliderBelief deltaplus_update(const ColliderBelief& belief, BeliefEvent event, double p_j,
                                double epsilon);

/// Belief-weighted CR objective sum_c phi(c) / (c p (1-p)^(c-1)).
double deltaplus_objective(const ColliderBelief& belief, double p);

/// Transmission probability minimizing the expected resolution time under
/// the belief. 1 when no mass sits above one collider.
double deltaplus_optimal_p(const ColliderBelief& belief);

}  // namespace delta
