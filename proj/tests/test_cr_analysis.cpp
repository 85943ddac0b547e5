#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <vector>

#include "delta/cr_analysis.hpp"
#include "oracles.hpp"

using namespace delta;

TEST_SUITE("cr_analysis") {
  TEST_CASE("success_prob examples") {
    CHECK(success_prob(1, 1.0, 0.0) == doctest::Approx(1.0));
    CHECK(success_prob(2, 0.5, 0.0) == doctest::Approx(0.5));
    CHECK(success_prob(3, 0.5, 0.05) == doctest::Approx(0.35625).epsilon(1e-12));
    for (int c = 1; c <= 8; ++c)
      for (double p : {0.1, 0.37, 0.9})
        CHECK(success_prob(c, p, 0.1) == doctest::Approx(0.9 * oracle::binom(1, c, p)).epsilon(1e-12));
  }

  TEST_CASE("expected_cycle_duration examples") {
    const std::vector<double> one{1.0};
    CHECK(expected_cycle_duration(1, one, 0.0) == doctest::Approx(2.0));
    const std::vector<double> half{0.5, 1.0};
    CHECK(expected_cycle_duration(2, half, 0.0) == doctest::Approx(3.0));
    const std::vector<double> zero{0.0, 1.0};
    CHECK_THROWS_AS(expected_cycle_duration(2, zero, 0.0), std::invalid_argument);
  }

  TEST_CASE("expected_cycle_duration against simulated cycles") {
    Rng rng(21);
    for (int c : {2, 3, 4}) {
      const auto p = optimal_p_static(c, 0.025, 0.05);
      const int cycles = 200000;
      double sum = 0.0;
      for (int i = 0; i < cycles; ++i) sum += oracle::simulate_cycle(c, p, 0.05, rng);
      CHECK(sum / cycles == doctest::Approx(expected_cycle_duration(c, p, 0.05)).epsilon(0.01));
    }
  }

  TEST_CASE("phase-type chain structure") {
    const std::vector<double> p{0.4, 0.55, 0.7, 1.0};
    const PhaseTypeModel m(4, p, 0.1);
    CHECK(m.size() == 5);
    for (int i = 0; i < m.size(); ++i) {
      double row = 0.0;
      for (int j = 0; j < m.size(); ++j) {
        row += m.at(i, j);
        if (j != i && j != i + 1) CHECK(m.at(i, j) == 0.0);
      }
      CHECK(row == doctest::Approx(1.0).epsilon(1e-14));
    }
    for (int i = 0; i < 4; ++i)
      CHECK(m.at(i, i + 1) == doctest::Approx(0.9 * oracle::binom(1, 4 - i, p[i])).epsilon(1e-12));
    CHECK(m.at(4, 4) == 1.0);
  }

  TEST_CASE("cycle_duration_cdf examples") {
    const std::vector<double> one{1.0};
    CHECK(cycle_duration_cdf(1, one, 0.0, 2) == doctest::Approx(1.0));
    CHECK(cycle_duration_cdf(1, one, 0.0, 1) == doctest::Approx(0.0));
    const std::vector<double> half{0.5, 1.0};
    Rng rng(5);
    std::vector<int> samples(100000);
    for (auto& s : samples) s = oracle::simulate_cycle(2, half, 0.0, rng);
    const auto emp = oracle::empirical_cdf(samples, 60);
    const double d = oracle::sup_distance(emp, [&](int t) { return cycle_duration_cdf(2, half, 0.0, t); });
    CHECK(d < 0.01);
  }

  TEST_CASE("cycle_duration_cdf is monotone and proper") {
    const auto p = optimal_p_static(5, 0.025, 0.05);
    double prev = 0.0;
    for (int t = 0; t <= 400; ++t) {
      const double v = cycle_duration_cdf(5, p, 0.05, t);
      CHECK(v >= prev - 1e-15);
      prev = v;
    }
    CHECK(prev == doctest::Approx(1.0).epsilon(1e-9));
    const auto pmf = PhaseTypeModel(5, p, 0.05).cycle_pmf(400);
    CHECK(std::accumulate(pmf.begin(), pmf.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
  }

  TEST_CASE("collider_count_pmf_zw examples") {
    const auto a = collider_count_pmf_zw(5, 0.2, 0.0);
    CHECK(a.mass[1] == 0.0);
    CHECK(a.mass[0] == 0.0);
    const auto b = collider_count_pmf_zw(2, 0.5, 0.0);
    CHECK(b.mass[2] == doctest::Approx(0.25));
    CHECK(b.p_fail == doctest::Approx(0.25));
    const auto c = collider_count_pmf_zw(20, 0.025, 0.05);
    const auto cond = c.conditional();
    CHECK(std::accumulate(cond.begin(), cond.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    // Failure probability by enumeration of the collider count.
    double pf = 0.05 * oracle::binom(1, 20, 0.025);
    for (int k = 2; k <= 20; ++k) pf += oracle::binom(k, 20, 0.025);
    CHECK(c.p_fail == doctest::Approx(pf).epsilon(1e-12));
  }

  TEST_CASE("cycle_cdf_mixture examples") {
    const auto p = optimal_p_static(20, 0.025, 0.05);
    CHECK(cycle_cdf_mixture(20, 0.025, 0.05, p, 0) == 0.0);
    CHECK(cycle_cdf_mixture(20, 0.025, 0.05, p, 2000) == doctest::Approx(1.0).epsilon(1e-9));
    Rng rng(33);
    std::vector<int> samples;
    while (samples.size() < 50000) {
      const int c = oracle::zw_failure(20, 0.025, 0.05, rng);
      if (c > 0) samples.push_back(oracle::simulate_cycle(c, p, 0.05, rng));
    }
    const auto emp = oracle::empirical_cdf(samples, 200);
    const double d = oracle::sup_distance(emp, [&](int t) { return cycle_cdf_mixture(20, 0.025, 0.05, p, t); });
    CHECK(d < 0.015);
  }

  TEST_CASE("optimal_p_phase against a fine grid") {
    for (double lambda : {0.005, 0.025})
      for (double eps : {0.0, 0.05})
        for (int n_i : {2, 3, 7, 20}) {
          const double p = optimal_p_phase(n_i, lambda, eps);
          const double g = oracle::grid_argmin(
              [&](double q) { return oracle::phase_objective(n_i, lambda, eps, q); }, 1e-4);
          CHECK(std::abs(p - g) < 1e-3);
        }
    CHECK(optimal_p_phase(1, 0.025, 0.05) == 1.0);
  }

  TEST_CASE("optimal_p_static shape and local optimality") {
    const auto p = optimal_p_static(20, 0.025, 0.05);
    REQUIRE(p.size() == 20);
    CHECK(p.back() == 1.0);
    for (int i = 0; i + 1 < 20; ++i) {
      const int n_i = 20 - i;
      const auto f = [&](double q) { return oracle::phase_objective(n_i, 0.025, 0.05, q); };
      CHECK(f(p[i]) <= f(std::min(0.9999, p[i] + 0.05)));
      CHECK(f(p[i]) <= f(std::max(1e-4, p[i] - 0.05)));
    }
  }

  TEST_CASE("optimal p table export") {
    OptimalPTable table;
    const auto v = table.vector_for(4, 0.025, 0.05);
    CHECK(table.size() == 4);
    CHECK(table.lookup(4, 0.025, 0.05) == v[0]);
    const auto path = std::filesystem::temp_directory_path() / "delta_ptable_test.txt";
    table.export_table(path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "N_i lambda epsilon p_star");
    int rows = 0;
    int n_i = 0;
    double lam = 0, eps = 0, p = 0;
    while (in >> n_i >> lam >> eps >> p) {
      ++rows;
      CHECK(p == doctest::Approx(optimal_p_phase(n_i, 0.025, 0.05)).epsilon(1e-9));
    }
    CHECK(rows == 4);
    std::filesystem::remove(path);
  }
}
