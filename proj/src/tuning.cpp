#include "delta/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "delta/sim.hpp"

namespace delta {

namespace {

/// Grid points are kept as integer hundredths so that coarse and fine scans
/// hit exactly the same values.
struct Point {
  int p1 = 100;
  int p2 = 100;
  auto operator<=>(const Point&) const = default;
};

struct Scored {
  Point point;
  double value = 0.0;
};

BaselineConfig to_config(BaselineKind kind, Point pt) {
  return {kind, pt.p1 / 100.0, pt.p2 / 100.0};
}

EpisodeConfig episode_for(const BaselineConfig& config, const TuneScenario& scenario,
                          std::int64_t slots) {
  EpisodeConfig c;
  c.params = scenario.params;
  c.feedback = scenario.feedback;
  c.protocol = ProtocolSpec::baseline(config);
  c.slots = slots;
  c.seed = scenario.seed;
  c.thresholds = {scenario.threshold};
  return c;
}

std::vector<Scored> score(BaselineKind kind, const std::vector<Point>& points,
                          const TuneScenario& scenario, std::int64_t slots, int workers) {
  std::vector<EpisodeConfig> configs;
  for (const Point& pt : points) configs.push_back(episode_for(to_config(kind, pt), scenario, slots));
  const auto ledgers = run_episodes(configs, workers);
  std::vector<Scored> out;
  for (std::size_t i = 0; i < points.size(); ++i)
    out.push_back({points[i], ledgers[i].violation.at(scenario.threshold)});
  return out;
}

/// Best first; ties keep grid order.
void rank(std::vector<Scored>& scored) {
  std::stable_sort(scored.begin(), scored.end(),
                   [](const Scored& a, const Scored& b) { return a.value < b.value; });
}

}  // namespace

double baseline_objective(const BaselineConfig& config, const TuneScenario& scenario,
                          std::int64_t slots) {
  config.validate();
  return run_episode(episode_for(config, scenario, slots)).violation.at(scenario.threshold);
}

TuneResult grid_search_params(BaselineKind kind, const TuneScenario& scenario,
                              const TuneBudget& budget) {
  TuneResult result;
  if (kind == BaselineKind::RR || kind == BaselineKind::MAF) {
    result.config = {kind, 1.0, 1.0};
    result.objective = baseline_objective(result.config, scenario, budget.final_slots);
    result.evaluations = 1;
    return result;
  }

  std::vector<Scored> screened;
  if (kind == BaselineKind::ZW) {
    std::vector<Point> grid;
    for (int p = 1; p <= 100; ++p) grid.push_back({p, 100});
    screened = score(kind, grid, scenario, budget.screen_slots, budget.workers);
  } else {
    const int coarse = std::max(1, static_cast<int>(std::lround(budget.coarse_step * 100)));
    std::vector<Point> grid;
    for (int p1 = coarse; p1 <= 100; p1 += coarse)
      for (int p2 = coarse; p2 <= 100; p2 += coarse) grid.push_back({p1, p2});
    screened = score(kind, grid, scenario, budget.screen_slots, budget.workers);
    rank(screened);
    const Point centre = screened.front().point;

    std::set<Point> seen;
    for (const auto& s : screened) seen.insert(s.point);
    std::vector<Point> fine;
    for (int p1 = std::max(1, centre.p1 - coarse); p1 <= std::min(100, centre.p1 + coarse); ++p1)
      for (int p2 = std::max(1, centre.p2 - coarse); p2 <= std::min(100, centre.p2 + coarse); ++p2)
        if (!seen.contains({p1, p2})) fine.push_back({p1, p2});
    auto refined = score(kind, fine, scenario, budget.screen_slots, budget.workers);
    screened.insert(screened.end(), refined.begin(), refined.end());
  }
  rank(screened);
  result.evaluations = static_cast<int>(screened.size());

  const std::size_t keep = std::min<std::size_t>(std::max(1, budget.finalists), screened.size());
  std::vector<Point> finalists;
  for (std::size_t i = 0; i < keep; ++i) finalists.push_back(screened[i].point);
  auto final_scores = score(kind, finalists, scenario, budget.final_slots, budget.workers);
  rank(final_scores);
  result.evaluations += static_cast<int>(final_scores.size());
  result.config = to_config(kind, final_scores.front().point);
  result.objective = final_scores.front().value;
  return result;
}

}  // namespace delta
