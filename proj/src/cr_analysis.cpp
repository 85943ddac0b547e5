#include "delta/cr_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <stdexcept>
#include <string>

namespace delta {

namespace {

constexpr double kBisectionTol = 1e-8;
constexpr int kBisectionMaxIter = 200;
constexpr double kAbsorbedMass = 1.0 - 1e-12;

void require_p(std::span<const double> p, int c, const char* who) {
  if (static_cast<int>(p.size()) < c)
    throw std::invalid_argument(std::string(who) + ": p vector shorter than collider count");
}

/// Root of a function that is positive at 0+ and negative at 1-, or 1 when
/// it never turns negative.
template <typename F>
double bisect_unit(F&& g) {
  double lo = 0.0;
  double hi = 1.0;
  if (g(1.0 - 1e-12) > 0.0) return 1.0;
  for (int it = 0; it < kBisectionMaxIter && hi - lo > kBisectionTol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double binomial_pmf(int k, int n, double p) {
  if (k < 0 || k > n) return 0.0;
  if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
  if (p >= 1.0) return k == n ? 1.0 : 0.0;
  const double log_choose = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
  return std::exp(log_choose + k * std::log(p) + (n - k) * std::log1p(-p));
}

double success_prob(int c, double p, double epsilon) {
  if (c < 1) throw std::invalid_argument("success_prob: c must be >= 1");
  return (1.0 - epsilon) * c * p * std::pow(1.0 - p, c - 1);
}

double expected_cycle_duration(int c, std::span<const double> p, double epsilon) {
  if (c < 1) throw std::invalid_argument("expected_cycle_duration: c must be >= 1");
  require_p(p, c, "expected_cycle_duration");
  if (c == 1) {
    if (p[0] <= 0.0) throw std::invalid_argument("expected_cycle_duration: p_1 = 0");
    return 1.0 + 1.0 / ((1.0 - epsilon) * p[0]);
  }
  double total = c - 1 + epsilon;
  if (epsilon > 0.0) {
    if (p[c - 1] <= 0.0) throw std::invalid_argument("expected_cycle_duration: p_c = 0");
    total += epsilon / ((1.0 - epsilon) * p[c - 1]);
  }
  for (int i = 0; i <= c - 2; ++i) {
    const double s = success_prob(c - i, p[i], epsilon);
    if (s <= 0.0) throw std::invalid_argument("expected_cycle_duration: zero success probability");
    total += 1.0 / s;
  }
  return total;
}

PhaseTypeModel::PhaseTypeModel(int c, std::span<const double> p, double epsilon)
    : c_(c), epsilon_(epsilon) {
  if (c < 1) throw std::invalid_argument("PhaseTypeModel: c must be >= 1");
  require_p(p, c, "PhaseTypeModel");
  p_.assign(p.begin(), p.begin() + c);
  const int m = c + 1;
  matrix_.assign(static_cast<std::size_t>(m) * m, 0.0);
  for (int i = 0; i < c; ++i) {
    const double s = success_prob(c - i, p_[i], epsilon);
    matrix_[static_cast<std::size_t>(i) * m + i] = 1.0 - s;
    matrix_[static_cast<std::size_t>(i) * m + i + 1] = s;
  }
  matrix_[static_cast<std::size_t>(c) * m + c] = 1.0;
}

std::vector<double> PhaseTypeModel::reduction_pmf(int t_max) const {
  std::vector<double> pmf(std::max(t_max, 0) + 1, 0.0);
  const int target = c_ - 1;
  if (target == 0) {
    pmf[0] = 1.0;
    return pmf;
  }
  // First row of P^t over the transient states 0..target-1.
  std::vector<double> v(target, 0.0);
  v[0] = 1.0;
  double absorbed = 0.0;
  for (int t = 1; t <= t_max && absorbed < kAbsorbedMass; ++t) {
    const double arriving = v[target - 1] * at(target - 1, target);
    for (int i = target - 1; i >= 1; --i) v[i] = v[i] * at(i, i) + v[i - 1] * at(i - 1, i);
    v[0] *= at(0, 0);
    pmf[t] = arriving;
    absorbed += arriving;
  }
  return pmf;
}

std::vector<double> PhaseTypeModel::cycle_pmf(int t_max) const {
  std::vector<double> pmf(std::max(t_max, 0) + 1, 0.0);
  if (c_ == 1) {
    const double q = (1.0 - epsilon_) * p_[0];
    double tail = 1.0;
    for (int t = 2; t <= t_max; ++t) {
      pmf[t] = q * tail;
      tail *= 1.0 - q;
    }
    return pmf;
  }
  const std::vector<double> a = reduction_pmf(t_max);
  const int shift = c_ - 1;  // CE slots
  const double q = (1.0 - epsilon_) * p_[c_ - 1];
  // Retry after an erased final CE: geometric CR part plus one CE slot.
  std::vector<double> retry(pmf.size(), 0.0);
  double tail = 1.0;
  for (int r = 2; r <= t_max; ++r) {
    retry[r] = q * tail;
    tail *= 1.0 - q;
  }
  for (int t = shift; t <= t_max; ++t) {
    double value = (1.0 - epsilon_) * a[t - shift];
    if (epsilon_ > 0.0) {
      double conv = 0.0;
      for (int r = 2; r <= t - shift; ++r) conv += retry[r] * a[t - shift - r];
      value += epsilon_ * conv;
    }
    pmf[t] = value;
  }
  return pmf;
}

double cycle_duration_cdf(int c, std::span<const double> p, double epsilon, int t) {
  if (t < 0) return 0.0;
  const auto pmf = PhaseTypeModel(c, p, epsilon).cycle_pmf(t);
  return std::min(1.0, std::accumulate(pmf.begin(), pmf.end(), 0.0));
}

std::vector<double> ColliderMass::conditional() const {
  std::vector<double> out(mass.size(), 0.0);
  if (p_fail <= 0.0) return out;
  for (std::size_t c = 0; c < mass.size(); ++c) out[c] = mass[c] / p_fail;
  return out;
}

ColliderMass collider_count_pmf_zw(int n, double lambda, double epsilon) {
  ColliderMass out;
  out.mass.assign(n + 1, 0.0);
  for (int c = 1; c <= n; ++c) {
    const double erasure = c == 1 ? epsilon : 1.0;
    out.mass[c] = binomial_pmf(c, n, lambda) * erasure;
    out.p_fail += out.mass[c];
  }
  return out;
}

std::vector<double> cycle_pmf_mixture(int n, double lambda, double epsilon,
                                      std::span<const double> p, int t_max) {
  std::vector<double> pmf(std::max(t_max, 0) + 1, 0.0);
  const ColliderMass zw = collider_count_pmf_zw(n, lambda, epsilon);
  if (zw.p_fail <= 0.0) return pmf;
  for (int c = 1; c <= n; ++c) {
    const double w = zw.mass[c] / zw.p_fail;
    if (w < 1e-300) continue;
    const auto part = PhaseTypeModel(c, p, epsilon).cycle_pmf(t_max);
    for (int t = 0; t <= t_max; ++t) pmf[t] += w * part[t];
  }
  return pmf;
}

double cycle_cdf_mixture(int n, double lambda, double epsilon, std::span<const double> p, int t) {
  if (t < 0) return 0.0;
  const auto pmf = cycle_pmf_mixture(n, lambda, epsilon, p, t);
  return std::min(1.0, std::accumulate(pmf.begin(), pmf.end(), 0.0));
}

double cr_phase_objective(int n_i, double lambda, double epsilon, double p) {
  double total = binomial_pmf(1, n_i, lambda) * epsilon / p;
  for (int c = 2; c <= n_i; ++c)
    total += binomial_pmf(c, n_i, lambda) / (c * p * std::pow(1.0 - p, c - 1));
  return total;
}

double cr_phase_derivative_condition(int n_i, double lambda, double epsilon, double p) {
  double total = binomial_pmf(1, n_i, lambda) * epsilon;
  for (int c = 2; c <= n_i; ++c)
    total += binomial_pmf(c, n_i, lambda) * (1.0 - c * p) / (c * std::pow(1.0 - p, c));
  return total;
}

double optimal_p_phase(int n_i, double lambda, double epsilon) {
  if (n_i <= 1) return 1.0;
  return bisect_unit(
      [&](double p) { return cr_phase_derivative_condition(n_i, lambda, epsilon, p); });
}

std::vector<double> optimal_p_static(int n, double lambda, double epsilon) {
  return OptimalPTable::global().vector_for(n, lambda, epsilon);
}

double OptimalPTable::lookup(int n_i, double lambda, double epsilon) {
  const Key key{n_i, std::llround(lambda * 1e6), std::llround(epsilon * 1e6)};
  {
    std::shared_lock lock(mutex_);
    if (auto it = table_.find(key); it != table_.end()) return it->second;
  }
  const double value = optimal_p_phase(n_i, std::get<1>(key) * 1e-6, std::get<2>(key) * 1e-6);
  std::unique_lock lock(mutex_);
  return table_.emplace(key, value).first->second;
}

std::vector<double> OptimalPTable::vector_for(int n, double lambda, double epsilon) {
  if (n < 1) throw std::invalid_argument("optimal_p_static: N must be >= 1");
  std::vector<double> p(n);
  for (int i = 0; i < n; ++i) p[i] = lookup(n - i, lambda, epsilon);
  return p;
}

std::size_t OptimalPTable::size() const {
  std::shared_lock lock(mutex_);
  return table_.size();
}

void OptimalPTable::export_table(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "N_i lambda epsilon p_star\n";
  std::shared_lock lock(mutex_);
  out << std::setprecision(10);
  for (const auto& [key, value] : table_)
    out << std::get<0>(key) << ' ' << std::get<1>(key) * 1e-6 << ' ' << std::get<2>(key) * 1e-6
        << ' ' << value << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

OptimalPTable& OptimalPTable::global() {
  static OptimalPTable table;
  return table;
}

ColliderBelief deltaplus_prior(int n, double lambda, double epsilon) {
  const ColliderMass zw = collider_count_pmf_zw(n, lambda, epsilon);
  ColliderBelief belief;
  belief.phi = zw.conditional();
  if (zw.p_fail <= 0.0) {
    // No failure is possible; fall back to a lone erased transmitter.
    belief.phi.assign(n + 1, 0.0);
    belief.phi[std::min(1, n)] = 1.0;
  }
  return belief;
}

std::optional<ColliderBelief> try_deltaplus_update(const ColliderBelief& belief, BeliefEvent event,
                                                   double p_j, double epsilon) {
  const int n = static_cast<int>(belief.phi.size()) - 1;
  ColliderBelief next;
  next.phi.assign(n + 1, 0.0);
  next.round = belief.round + 1;
  const auto& phi = belief.phi;
  switch (event) {
    case BeliefEvent::AckCR:
      for (int c = 0; c < n; ++c)
        next.phi[c] = phi[c + 1] * (c + 1) * p_j * (1.0 - epsilon) * std::pow(1.0 - p_j, c);
      break;
    case BeliefEvent::SilentCR:
      for (int c = 0; c <= n; ++c) next.phi[c] = phi[c] * std::pow(1.0 - p_j, c);
      break;
    case BeliefEvent::NackCR:
      for (int c = 0; c <= n; ++c) {
        const double nack = 1.0 - std::pow(1.0 - p_j, c) -
                            (c >= 1 ? c * p_j * (1.0 - epsilon) * std::pow(1.0 - p_j, c - 1) : 0.0);
        next.phi[c] = phi[c] * std::max(0.0, nack);
      }
      break;
    case BeliefEvent::NackCE:
      for (int c = 1; c <= n; ++c) next.phi[c] = phi[c] * (c == 1 ? epsilon : 1.0);
      break;
  }
  const double total = std::accumulate(next.phi.begin(), next.phi.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total)) return std::nullopt;
  for (double& v : next.phi) v /= total;
  return next;
}

ColliderBelief deltaplus_update(const ColliderBelief& belief, BeliefEvent event, double p_j,
                                double epsilon) {
  auto next = try_deltaplus_update(belief, event, p_j, epsilon);
  if (!next) throw std::domain_error("deltaplus_update: event has zero likelihood under belief");
  return *next;
}

double deltaplus_objective(const ColliderBelief& belief, double p) {
  double total = 0.0;
  for (std::size_t c = 1; c < belief.phi.size(); ++c)
    total += belief.phi[c] / (static_cast<double>(c) * p * std::pow(1.0 - p, c - 1.0));
  return total;
}

double deltaplus_optimal_p(const ColliderBelief& belief) {
  const auto& phi = belief.phi;
  bool has_multi = false;
  for (std::size_t c = 2; c < phi.size(); ++c) has_multi = has_multi || phi[c] > 0.0;
  if (!has_multi) return 1.0;
  return bisect_unit([&](double p) {
    double total = phi.size() > 1 ? phi[1] : 0.0;
    const double inv = 1.0 / (1.0 - p);
    double scale = inv;  // (1-p)^-c
    for (std::size_t c = 2; c < phi.size(); ++c) {
      scale *= inv;
      if (phi[c] == 0.0) continue;
      const double cd = static_cast<double>(c);
      total += (1.0 - cd * p) * phi[c] * scale / cd;
    }
    return total;
  });
}

}  // namespace delta
