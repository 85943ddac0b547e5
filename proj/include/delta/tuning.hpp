#pragma once

#include <cstdint>

#include "delta/baselines.hpp"
#include "delta/channel.hpp"
#include "delta/core.hpp"

namespace delta {

/// Scenario a baseline is tuned for.
struct TuneScenario {
  SystemParams params = SystemParams::symmetric(1, 0.0, 0.0);
  FeedbackModel feedback;
  /// Objective: V(threshold).
  Age threshold = 0;
  std::uint64_t seed = 1;
};

struct TuneBudget {
  std::int64_t screen_slots = 100'000;
  std::int64_t final_slots = 1'000'000;
  /// Candidates re-run at final_slots.
  int finalists = 5;
  /// Two-parameter searches first scan this coarser grid, then refine at
  /// 0.01 within +-coarse_step of the best coarse point.
  double coarse_step = 0.05;
  int workers = 1;
};

struct TuneResult {
  BaselineConfig config;
  double objective = 0.0;
  int evaluations = 0;
};

/// Monte Carlo V(threshold) of one baseline setting. All settings of a
/// search share the scenario seed, so they see the same activations.
double baseline_objective(const BaselineConfig& config, const TuneScenario& scenario,
                          std::int64_t slots);

/// Grid search over p1 (and p2 for LZW/GZW) on the 0.01 grid in (0,1].
/// RR and MAF have nothing to tune and are evaluated once.
TuneResult grid_search_params(BaselineKind kind, const TuneScenario& scenario,
                              const TuneBudget& budget = {});

}  // namespace delta
