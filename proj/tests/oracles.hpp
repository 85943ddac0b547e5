#pragma once

// Reference computations for the tests. Nothing here calls into the library
// beyond the RNG helpers, so agreement is an independent check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "delta/core.hpp"

namespace oracle {

inline double choose(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline double binom(int k, int n, double p) {
  return choose(n, k) * std::pow(p, k) * std::pow(1.0 - p, n - k);
}

/// Length of one simulated collision-resolution cycle with c colliders.
/// Each CR slot every remaining collider sends with p[phase]; a lone
/// unerased packet removes one collider and is followed by a CE slot in which
/// all remaining members send. CE with nobody left is silent and ends the
/// cycle; a lone unerased CE packet ends it too; anything else is a NACK that
/// starts the next CR phase.
inline int simulate_cycle(int c, const std::vector<double>& p, double eps, delta::Rng& rng) {
  int left = c;
  int phase = 0;
  int slots = 0;
  while (true) {
    const double q = p[std::min<std::size_t>(phase, p.size() - 1)];
    ++slots;
    int senders = 0;
    for (int k = 0; k < left; ++k) senders += delta::bernoulli(rng, q);
    if (senders != 1 || delta::bernoulli(rng, eps)) continue;
    --left;
    ++slots;  // CE
    if (left == 0) return slots;
    if (left == 1 && !delta::bernoulli(rng, eps)) return slots;
    ++phase;
  }
}

/// Empirical CDF on 0..t_max.
inline std::vector<double> empirical_cdf(const std::vector<int>& samples, int t_max) {
  std::vector<double> cdf(t_max + 1, 0.0);
  for (int s : samples)
    if (s <= t_max) cdf[s] += 1.0;
  double acc = 0.0;
  for (auto& v : cdf) {
    acc += v;
    v = acc / static_cast<double>(samples.size());
  }
  return cdf;
}

inline double sup_distance(const std::vector<double>& a, const std::function<double(int)>& b) {
  double d = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) d = std::max(d, std::abs(a[t] - b(static_cast<int>(t))));
  return d;
}

/// CR-phase objective with up to n_i colliders, written out from the
/// expected-duration expression: lone survivors only cost the erasure term.
inline double phase_objective(int n_i, double lambda, double eps, double p) {
  double total = binom(1, n_i, lambda) * eps / p;
  for (int c = 2; c <= n_i; ++c) total += binom(c, n_i, lambda) / (c * p * std::pow(1.0 - p, c - 1));
  return total;
}

/// argmin of f over the grid step, 2 step, ..., 1 - step.
inline double grid_argmin(const std::function<double(double)>& f, double step) {
  double best = step;
  double best_v = f(step);
  const long count = std::lround(1.0 / step);
  for (long i = 2; i < count; ++i) {
    const double p = static_cast<double>(i) * step;
    const double v = f(p);
    if (v < best_v) {
      best_v = v;
      best = p;
    }
  }
  return best;
}

enum class Event { AckCR, SilentCR, NackCR, NackCE };

/// Posterior over the number of remaining colliders after a ZW failure and a
/// sequence of public events, by enumerating every activation pattern of n
/// nodes, every transmission pattern and every erasure outcome. p[j] is the
/// CR probability of event j. Returns nullopt when the sequence has zero
/// probability.
inline std::optional<std::vector<double>> enumerate_posterior(int n, double lambda, double eps,
                                                              const std::vector<Event>& events,
                                                              const std::vector<double>& p) {
  std::vector<double> post(n + 1, 0.0);
  // State: bitmask of remaining colliders, with its probability.
  std::function<void(unsigned, std::size_t, double)> walk = [&](unsigned set, std::size_t j,
                                                                double w) {
    if (w == 0.0) return;
    int size = 0;
    for (int i = 0; i < n; ++i) size += (set >> i) & 1u;
    if (j == events.size()) {
      post[size] += w;
      return;
    }
    const Event ev = events[j];
    if (ev == Event::NackCE) {
      // Everyone left sends: NACK unless silent or a lone unerased packet.
      if (size >= 2) walk(set, j + 1, w);
      else if (size == 1) walk(set, j + 1, w * eps);
      return;
    }
    // Enumerate which members send this CR slot.
    for (unsigned sub = set;; sub = (sub - 1) & set) {
      int k = 0;
      double pw = 1.0;
      for (int i = 0; i < n; ++i) {
        if (!((set >> i) & 1u)) continue;
        if ((sub >> i) & 1u) {
          pw *= p[j];
          ++k;
        } else {
          pw *= 1.0 - p[j];
        }
      }
      if (k == 0 && ev == Event::SilentCR) walk(set, j + 1, w * pw);
      if (k == 1) {
        if (ev == Event::AckCR) walk(set & ~sub, j + 1, w * pw * (1.0 - eps));
        if (ev == Event::NackCR) walk(set, j + 1, w * pw * eps);
      }
      if (k >= 2 && ev == Event::NackCR) walk(set, j + 1, w * pw);
      if (sub == 0) break;
    }
  };
  for (unsigned act = 0; act < (1u << n); ++act) {
    double w = 1.0;
    int k = 0;
    for (int i = 0; i < n; ++i) {
      const bool on = (act >> i) & 1u;
      w *= on ? lambda : 1.0 - lambda;
      k += on;
    }
    // The slot that opened the cycle failed.
    if (k == 0) continue;
    if (k == 1) w *= eps;
    walk(act, 0, w);
  }
  double total = 0.0;
  for (double v : post) total += v;
  if (!(total > 0.0)) return std::nullopt;
  for (double& v : post) v /= total;
  return post;
}

/// Collider count out of a ZW slot that failed, or 0 when it did not.
inline int zw_failure(int n, double lambda, double eps, delta::Rng& rng) {
  int k = 0;
  for (int i = 0; i < n; ++i) k += delta::bernoulli(rng, lambda);
  if (k >= 2) return k;
  if (k == 1 && delta::bernoulli(rng, eps)) return 1;
  return 0;
}

}  // namespace oracle
