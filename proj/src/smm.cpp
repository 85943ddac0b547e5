#include "delta/smm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "delta/cr_analysis.hpp"

namespace delta {

namespace {

double bt_alpha(double k, double l, double lambda) {
  return 1.0 - std::pow(1.0 - lambda, k / l);
}

/// Per-step reduction of the bound in BT, floor(K/L) - 1.
int bt_decrement(double k, double l) { return static_cast<int>(std::floor(k / l)) - 1; }

/// Cycle-length law of a cycle opened out of BT(psi_src).
std::vector<double> bt_cycle_pmf(const SemiMarkovModel& model, int psi_src,
                                 std::span<const double> p_zw, const SmmOptions& options) {
  const double l = model.active[psi_src];
  const int l_int = std::max(1, static_cast<int>(std::lround(l)));
  const double alpha = bt_alpha(model.k, l, model.lambda);
  if (options.bt_p_adjust) {
    const auto p = optimal_p_static(l_int, alpha, model.epsilon);
    return cycle_pmf_mixture(l_int, alpha, model.epsilon, p, model.psi_max);
  }
  return cycle_pmf_mixture(l_int, alpha, model.epsilon, p_zw, model.psi_max);
}

}  // namespace

std::string to_string(SmmVariant variant) {
  return variant == SmmVariant::Pessimistic ? "pessimistic" : "optimistic";
}

double k_from_threshold(double f, double lambda) {
  if (!(f > 0.0 && f < 1.0)) throw std::invalid_argument("k_from_threshold: F outside (0,1)");
  if (!(lambda > 0.0 && lambda < 1.0))
    throw std::invalid_argument("k_from_threshold: lambda outside (0,1)");
  return std::log(f) / std::log1p(-lambda);
}

double collision_prob_bt(double k, double l, double lambda, double epsilon) {
  if (!(l >= 1.0)) throw std::invalid_argument("collision_prob_bt: L must be >= 1");
  const double alpha = bt_alpha(k, l, lambda);
  const double lone = l * alpha * std::pow(1.0 - alpha, l - 1.0);
  return std::max(0.0, 1.0 - std::pow(1.0 - lambda, k) - (1.0 - epsilon) * lone);
}

double collision_prob_zw(int n, double lambda, double epsilon) {
  return collision_prob_bt(n, n, lambda, epsilon);
}

double expected_colliders(int n, double lambda, double epsilon, std::span<const double> p,
                          int psi) {
  if (psi < 0) return 0.0;
  const ColliderMass zw = collider_count_pmf_zw(n, lambda, epsilon);
  double num = 0.0;
  double den = 0.0;
  for (int c = 1; c <= n; ++c) {
    if (zw.mass[c] <= 0.0) continue;
    const double like = PhaseTypeModel(c, p, epsilon).cycle_pmf(psi)[psi];
    num += c * zw.mass[c] * like;
    den += zw.mass[c] * like;
  }
  return den > 0.0 ? num / den : 0.0;
}

double active_nodes(int psi, SmmVariant variant, int n, double lambda, double epsilon,
                    std::span<const double> p) {
  if (variant == SmmVariant::Pessimistic) return n;
  return std::max(1.0, n - expected_colliders(n, lambda, epsilon, p, psi));
}

std::string SemiMarkovModel::state_name(int s) const {
  if (s == zw()) return "ZW";
  if (s <= psi_max + 1) return "CR(" + std::to_string(s - 1) + ")";
  return "BT(" + std::to_string(s - psi_max - 1) + ")";
}

int default_psi_max(int n) { return 8 * n; }

SemiMarkovModel build_model(int n, double lambda, double epsilon, double k, int psi_max,
                            SmmVariant variant, const SmmOptions& options) {
  if (n < 1) throw std::invalid_argument("build_model: N must be >= 1");
  if (psi_max < 2) throw std::invalid_argument("build_model: Psi must be >= 2");
  if (!(k > 0.0)) throw std::invalid_argument("build_model: K must be positive");
  if (!(lambda >= 0.0 && lambda < 1.0) || !(epsilon >= 0.0 && epsilon < 1.0))
    throw std::invalid_argument("build_model: probabilities out of range");

  SemiMarkovModel model;
  model.n = n;
  model.lambda = lambda;
  model.epsilon = epsilon;
  model.k = k;
  model.psi_max = psi_max;
  model.variant = variant;
  const int size = model.size();
  model.m = Eigen::MatrixXd::Zero(size, size);
  model.t = Eigen::MatrixXd::Zero(size, size);

  const auto p_zw = optimal_p_static(n, lambda, epsilon);

  model.active.assign(psi_max + 1, n);
  model.collision.assign(psi_max + 1, 0.0);
  if (variant == SmmVariant::Optimistic) {
    // E[C | psi] for every psi in one pass over the collider counts.
    const ColliderMass zw = collider_count_pmf_zw(n, lambda, epsilon);
    std::vector<double> num(psi_max + 1, 0.0);
    std::vector<double> den(psi_max + 1, 0.0);
    for (int c = 1; c <= n; ++c) {
      if (zw.mass[c] <= 0.0) continue;
      const auto pmf = PhaseTypeModel(c, p_zw, epsilon).cycle_pmf(psi_max);
      for (int s = 1; s <= psi_max; ++s) {
        num[s] += c * zw.mass[c] * pmf[s];
        den[s] += zw.mass[c] * pmf[s];
      }
    }
    for (int s = 1; s <= psi_max; ++s)
      if (den[s] > 0.0) model.active[s] = std::max(1.0, n - num[s] / den[s]);
  }
  model.collision[0] = collision_prob_zw(n, lambda, epsilon);
  for (int s = 1; s <= psi_max; ++s)
    model.collision[s] = collision_prob_bt(k, model.active[s], lambda, epsilon);

  // ZW: the next event is always a collision, after a geometric wait.
  model.m(model.zw(), model.cr(0)) = 1.0;
  model.t(model.zw(), model.cr(0)) = model.collision[0] > 0.0
                                         ? 1.0 / model.collision[0]
                                         : std::numeric_limits<double>::infinity();

  // CR(psi'): a cycle of length l leads to BT(psi' + l); anything reaching
  // the truncation lands in BT(Psi) with the pessimistic sojourn Psi.
  const auto zw_pmf = cycle_pmf_mixture(n, lambda, epsilon, p_zw, psi_max);
  for (int from = 0; from <= psi_max; ++from) {
    std::vector<double> zeta;
    if (from == 0) {
      zeta = zw_pmf;
    } else {
      const int d = bt_decrement(k, model.active[std::clamp(from, 1, psi_max)]);
      zeta = bt_cycle_pmf(model, std::clamp(from + d, 1, psi_max), p_zw, options);
    }
    double inside = 0.0;
    for (int l = 1; from + l < psi_max; ++l) {
      model.m(model.cr(from), model.bt(from + l)) = zeta[l];
      model.t(model.cr(from), model.bt(from + l)) = l;
      inside += zeta[l];
    }
    model.m(model.cr(from), model.bt(psi_max)) = std::max(0.0, 1.0 - inside);
    model.t(model.cr(from), model.bt(psi_max)) = psi_max;
  }

  // BT(psi): one slot; success lowers the bound by floor(K/L) - 1, a
  // collision opens a cycle at the lowered bound.
  for (int s = 1; s <= psi_max; ++s) {
    const double xi = model.collision[s];
    const int next = s - bt_decrement(k, model.active[s]);
    const int row = model.bt(s);
    const int ok = next <= 0 ? model.zw() : model.bt(std::min(next, psi_max));
    const int bad = model.cr(std::clamp(next, 0, psi_max));
    model.m(row, ok) += 1.0 - xi;
    model.t(row, ok) = 1.0;
    model.m(row, bad) += xi;
    model.t(row, bad) = 1.0;
  }
  return model;
}

SteadyState steady_state(const Eigen::MatrixXd& m, const Eigen::MatrixXd& t) {
  const Eigen::Index size = m.rows();
  if (m.cols() != size || t.rows() != size || t.cols() != size)
    throw std::invalid_argument("steady_state: matrix shapes differ");

  SteadyState out;
  // A state left only after an infinite wait holds all the time mass.
  for (Eigen::Index s = 0; s < size; ++s)
    for (Eigen::Index j = 0; j < size; ++j)
      if (m(s, j) > 0.0 && std::isinf(t(s, j))) {
        out.alpha.assign(size, 0.0);
        out.pi.assign(size, 0.0);
        out.alpha[s] = 1.0;
        out.pi[s] = 1.0;
        return out;
      }

  Eigen::MatrixXd a = m.transpose() - Eigen::MatrixXd::Identity(size, size);
  a.row(size - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(size);
  b(size - 1) = 1.0;
  Eigen::VectorXd alpha = a.colPivHouseholderQr().solve(b);
  for (Eigen::Index s = 0; s < size; ++s) alpha(s) = std::max(0.0, alpha(s));
  alpha /= alpha.sum();

  const Eigen::RowVectorXd balance = alpha.transpose() * m - alpha.transpose();
  out.residual = balance.cwiseAbs().maxCoeff();
  if (!(out.residual <= 1e-12))
    throw std::runtime_error("steady_state: eigenvector solve did not converge (residual " +
                             std::to_string(out.residual) + ")");

  const Eigen::VectorXd weight = (m.cwiseProduct(t)).rowwise().sum();
  Eigen::VectorXd pi = alpha.cwiseProduct(weight);
  pi /= pi.sum();
  out.alpha.assign(alpha.data(), alpha.data() + size);
  out.pi.assign(pi.data(), pi.data() + size);
  return out;
}

SteadyState steady_state(const SemiMarkovModel& model) { return steady_state(model.m, model.t); }

double pi_zw(int n, double lambda, double epsilon, double k, int psi_max, SmmVariant variant,
             const SmmOptions& options) {
  if (collision_prob_zw(n, lambda, epsilon) <= 0.0) return 1.0;
  return steady_state(build_model(n, lambda, epsilon, k, psi_max, variant, options))
      .pi[SemiMarkovModel::zw()];
}

KOptimum optimize_k(int n, double lambda, double epsilon, int psi_max, SmmVariant variant,
                    std::span<const double> k_range, const SmmOptions& options) {
  if (k_range.empty()) throw std::invalid_argument("optimize_k: empty K range");
  KOptimum best;
  best.pi_zw = -1.0;
  for (double k : k_range) {
    const double value = pi_zw(n, lambda, epsilon, k, psi_max, variant, options);
    best.curve.emplace_back(k, value);
    if (value > best.pi_zw || (value == best.pi_zw && k < best.k)) {
      best.k = k;
      best.pi_zw = value;
    }
  }
  return best;
}

StabilityReport stability_check(int n, double lambda, double epsilon, double k, int psi_max,
                                SmmVariant variant, const SmmOptions& options) {
  StabilityReport r;
  const auto tail_of = [&](int psi, double& tail, double& zw) {
    const auto model = build_model(n, lambda, epsilon, k, psi, variant, options);
    const auto ss = steady_state(model);
    // BT(Psi) alone always scales like 1/Psi through the overflow sojourn,
    // so look at the whole upper half of the range.
    tail = 0.0;
    for (int p = psi / 2 + 1; p <= psi; ++p) tail += ss.pi[model.cr(p)] + ss.pi[model.bt(p)];
    zw = ss.pi[model.zw()];
  };
  tail_of(psi_max, r.tail, r.pi_zw);
  tail_of(2 * psi_max, r.tail_doubled, r.pi_zw_doubled);
  r.unstable = r.tail_doubled > 1e-6 && r.tail_doubled >= 0.5 * r.tail;
  return r;
}

}  // namespace delta
