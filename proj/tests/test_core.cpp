#include <doctest.h>

#include "delta/core.hpp"

using namespace delta;

TEST_SUITE("core") {
  TEST_CASE("step_anomaly examples") {
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
      CHECK_FALSE(step_anomaly(false, 0.0, rng));
      CHECK(step_anomaly(true, 0.3, rng));
      CHECK(step_anomaly(false, 1.0, rng));
    }
  }

  TEST_CASE("step_anomaly draws once per call regardless of state") {
    Rng a(11);
    Rng b(11);
    step_anomaly(true, 0.2, a);
    step_anomaly(false, 0.2, b);
    CHECK(a() == b());
  }

  TEST_CASE("step_anomaly frequency") {
    Rng rng(3);
    int hits = 0;
    const int trials = 200000;
    for (int i = 0; i < trials; ++i) hits += step_anomaly(false, 0.025, rng);
    const double se = std::sqrt(0.025 * 0.975 / trials);
    CHECK(std::abs(hits / double(trials) - 0.025) < 4 * se);
  }

  TEST_CASE("update_ages examples") {
    CHECK(update_ages({0, true, 3, 2}, true) == NodeRecord{0, false, 0, 0});
    CHECK(update_ages({0, true, 3, 2}, false) == NodeRecord{0, true, 4, 3});
    CHECK(update_ages({0, false, 5, 0}, false) == NodeRecord{0, false, 6, 0});
  }

  TEST_CASE("violation_indicator is strict") {
    CHECK_FALSE(violation_indicator(0, 0));
    CHECK(violation_indicator(1, 0));
    CHECK_FALSE(violation_indicator(5, 5));
  }

  TEST_CASE("uniform01 stays below one") {
    Rng rng(1);
    for (int i = 0; i < 100000; ++i) {
      const double u = uniform01(rng);
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
    }
  }

  TEST_CASE("streams are reproducible and distinct") {
    Rng a = make_stream(5, 0);
    Rng b = make_stream(5, 0);
    Rng c = make_stream(5, 1);
    Rng d = make_stream(6, 0);
    const auto va = a();
    CHECK(va == b());
    CHECK(va != c());
    CHECK(va != d());
  }

  TEST_CASE("SystemParams") {
    const auto p = SystemParams::from_load(20, 0.5, 0.05);
    CHECK(p.n() == 20);
    CHECK(p.lambda(3) == doctest::Approx(0.025));
    CHECK(p.rho() == doctest::Approx(0.5));
    CHECK(p.mean_epsilon() == doctest::Approx(0.05));
    CHECK_THROWS(SystemParams({0.1, 1.5}, {0.0, 0.0}));
    CHECK_THROWS(SystemParams({0.1}, {0.0, 0.0}));
  }
}
