#include <doctest.h>

#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "delta/cr_analysis.hpp"
#include "delta/smm.hpp"
#include "oracles.hpp"

using namespace delta;

TEST_SUITE("smm") {
  TEST_CASE("k_from_threshold examples") {
    CHECK(k_from_threshold(1.0 - 0.025, 0.025) == doctest::Approx(1.0));
    CHECK(k_from_threshold(std::pow(0.9, 37.0), 0.1) == doctest::Approx(37.0));
    CHECK(k_from_threshold(0.2819, 0.025) == doctest::Approx(50.03).epsilon(1e-3));
  }

  TEST_CASE("collision_prob_bt examples") {
    CHECK(collision_prob_bt(50, 20, 0.0, 0.05) == 0.0);
    CHECK(collision_prob_bt(50, 20, 0.025, 1.0) == doctest::Approx(1.0 - std::pow(0.975, 50)));
    // One BT slot with alpha-Bernoulli transmitters.
    const double alpha = 1.0 - std::pow(0.975, 50.0 / 20.0);
    Rng rng(2);
    const int trials = 1000000;
    int fails = 0;
    for (int i = 0; i < trials; ++i) {
      int k = 0;
      for (int n = 0; n < 20; ++n) k += bernoulli(rng, alpha);
      fails += k >= 2 || (k == 1 && bernoulli(rng, 0.05));
    }
    const double xi = collision_prob_bt(50, 20, 0.025, 0.05);
    const double se = std::sqrt(xi * (1 - xi) / trials);
    CHECK(std::abs(fails / double(trials) - xi) < 3 * se);
  }

  TEST_CASE("collision_prob_zw") {
    const double expect = 1.0 - std::pow(0.975, 20) - 0.95 * oracle::binom(1, 20, 0.025);
    CHECK(collision_prob_zw(20, 0.025, 0.05) == doctest::Approx(expect).epsilon(1e-12));
  }

  TEST_CASE("active_nodes examples") {
    const auto p = optimal_p_static(20, 0.025, 0.05);
    for (int psi : {1, 4, 9}) CHECK(active_nodes(psi, SmmVariant::Pessimistic, 20, 0.025, 0.05, p) == 20.0);
    // A cycle of one slot is impossible, so there is nothing to subtract.
    CHECK(active_nodes(1, SmmVariant::Optimistic, 20, 0.025, 0.05, p) == 20.0);

    // E[C | cycle length 4] by simulating ZW-born cycles.
    Rng rng(44);
    double sum = 0.0;
    double sum2 = 0.0;
    int hits = 0;
    while (hits < 40000) {
      const int c = oracle::zw_failure(20, 0.025, 0.05, rng);
      if (c == 0) continue;
      if (oracle::simulate_cycle(c, p, 0.05, rng) != 4) continue;
      sum += c;
      sum2 += double(c) * c;
      ++hits;
    }
    const double mean = sum / hits;
    const double se = std::sqrt((sum2 / hits - mean * mean) / hits);
    const double model = expected_colliders(20, 0.025, 0.05, p, 4);
    CHECK(std::abs(model - mean) < 3 * se + 1e-9);
    CHECK(active_nodes(4, SmmVariant::Optimistic, 20, 0.025, 0.05, p) == doctest::Approx(20.0 - model));
  }

  TEST_CASE("transition matrix rows and the ZW row") {
    for (auto variant : {SmmVariant::Pessimistic, SmmVariant::Optimistic}) {
      const auto m = build_model(20, 0.025, 0.05, 50, 40, variant);
      CHECK(m.size() == 82);
      for (int s = 0; s < m.size(); ++s) CHECK(m.m.row(s).sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(m.m(0, m.cr(0)) == 1.0);
      CHECK(m.m.row(0).sum() == 1.0);
    }
  }

  TEST_CASE("K = 3N, Psi = 4 reproduces the figure's edge set") {
    const auto m = build_model(20, 0.025, 0.05, 60, 4, SmmVariant::Pessimistic);
    const auto zw = SemiMarkovModel::zw();
    const auto cr = [&](int p) { return m.cr(p); };
    const auto bt = [&](int p) { return m.bt(p); };
    const std::set<std::pair<int, int>> expected{
        {bt(4), bt(2)}, {bt(3), bt(1)}, {bt(2), zw},    {bt(1), zw},    {zw, cr(0)},    {bt(1), cr(0)},
        {bt(2), cr(0)}, {bt(3), cr(1)}, {bt(4), cr(2)}, {cr(4), bt(4)}, {cr(0), bt(2)}, {cr(0), bt(3)},
        {cr(0), bt(4)}, {cr(1), bt(3)}, {cr(1), bt(4)}, {cr(2), bt(4)}, {cr(3), bt(4)}};
    std::set<std::pair<int, int>> actual;
    for (int s = 0; s < m.size(); ++s)
      for (int t = 0; t < m.size(); ++t)
        if (m.m(s, t) > 0.0) actual.insert({s, t});
    CHECK(actual == expected);
    // Sojourn of CR -> BT is the jump in psi, BT steps take one slot.
    CHECK(m.t(cr(1), bt(3)) == 2.0);
    CHECK(m.t(bt(3), bt(1)) == 1.0);
    CHECK(m.t(zw, cr(0)) == doctest::Approx(1.0 / collision_prob_zw(20, 0.025, 0.05)));
  }

  TEST_CASE("steady state of a hand-solvable model") {
    Eigen::MatrixXd mm(2, 2);
    mm << 0, 1, 1, 0;
    Eigen::MatrixXd tt(2, 2);
    tt << 0, 3, 5, 0;
    const auto s = steady_state(mm, tt);
    CHECK(s.pi[0] == doctest::Approx(3.0 / 8.0));
    CHECK(s.pi[1] == doctest::Approx(5.0 / 8.0));
    Eigen::MatrixXd m3(3, 3);
    m3 << 0, 0.5, 0.5, 1, 0, 0, 1, 0, 0;
    Eigen::MatrixXd t3(3, 3);
    t3 << 0, 2, 4, 1, 0, 0, 1, 0, 0;
    const auto s3 = steady_state(m3, t3);
    // Embedded chain: alpha = (1/2, 1/4, 1/4); mean sojourns 3, 1, 1.
    CHECK(s3.alpha[0] == doctest::Approx(0.5));
    CHECK(s3.pi[0] == doctest::Approx(1.5 / 2.0));
  }

  TEST_CASE("steady state of the full model is a distribution") {
    const auto m = build_model(20, 0.025, 0.05, 50, 160, SmmVariant::Optimistic);
    const auto s = steady_state(m);
    double total = 0.0;
    for (double v : s.pi) {
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.residual < 1e-12);
  }

  TEST_CASE("optimize_k ties go to the smallest K") {
    const std::vector<double> ks{30, 40, 50};
    const auto best = optimize_k(20, 0.0, 0.05, 40, SmmVariant::Pessimistic, ks);
    CHECK(best.k == 30);
    for (const auto& [k, v] : best.curve) CHECK(v == doctest::Approx(1.0));
  }

  TEST_CASE("pessimistic pi(ZW) never exceeds optimistic") {
    for (double lambda : {0.01, 0.025})
      for (double k = 30; k <= 120; k += 6) {
        const double pess = pi_zw(20, lambda, 0.05, k, 160, SmmVariant::Pessimistic);
        const double opt = pi_zw(20, lambda, 0.05, k, 160, SmmVariant::Optimistic);
        CHECK(pess <= opt + 1e-12);
      }
  }

  TEST_CASE("truncation insensitivity in the stable regime") {
    for (auto variant : {SmmVariant::Pessimistic, SmmVariant::Optimistic}) {
      const double a = pi_zw(20, 0.01, 0.05, 60, 160, variant);
      const double b = pi_zw(20, 0.01, 0.05, 60, 320, variant);
      CHECK(a > 0.5);
      CHECK(std::abs(a - b) < 1e-3);
    }
  }

  TEST_CASE("stability check flags an overloaded system") {
    const auto light = stability_check(20, 0.01, 0.05, 50, 40, SmmVariant::Optimistic);
    CHECK_FALSE(light.unstable);
    const auto heavy = stability_check(20, 0.2, 0.05, 50, 40, SmmVariant::Pessimistic);
    CHECK(heavy.unstable);
    CHECK(heavy.tail > 0.9);
  }
}
