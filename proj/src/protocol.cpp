#include "delta/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace delta {

bool in_cycle(Phase phase) { return phase == Phase::CR || phase == Phase::CE; }

namespace {

void cap_by_aoi(PublicView& v) {
  for (std::size_t n = 0; n < v.aoi.size(); ++n) {
    v.psi[n] = std::min(v.psi[n], v.aoi[n]);
    v.tx_bound[n] = std::min(v.tx_bound[n], v.aoi[n]);
  }
}

const ColliderBelief& cycle_prior(const PublicView& v, const DeltaConfig& config) {
  return v.cycle_from_bt && config.bt_p_adjust ? config.prior_bt : config.prior_zw;
}

void refresh_cr_p(PublicView& v, const DeltaConfig& config) {
  double p = 1.0;
  if (config.variant == Variant::DeltaPlus && v.belief) {
    p = deltaplus_optimal_p(*v.belief);
  } else {
    const auto& vec = v.cycle_from_bt && config.bt_p_adjust ? config.p_bt : config.p_zw;
    p = vec[std::min<std::size_t>(v.cr_round, vec.size() - 1)];
  }
  if (p >= 1.0 && v.cr_nack_streak >= kStallNacks) p = kStallFallbackP;
  v.cr_p = p;
}

void update_belief(PublicView& v, BeliefEvent event, double p_j, const DeltaConfig& config) {
  if (config.variant != Variant::DeltaPlus || !v.belief) return;
  auto next = try_deltaplus_update(*v.belief, event, p_j, config.epsilon);
  // A zero-likelihood event means the view is out of step with reality.
  v.belief = next ? *next : cycle_prior(v, config);
}

void open_cycle(PublicView& v, bool from_bt, const DeltaConfig& config) {
  v.phase = Phase::CR;
  v.cr_round = 0;
  v.cr_nack_streak = 0;
  v.cycle_from_bt = from_bt;
  if (config.variant == Variant::DeltaPlus) {
    const bool bt = v.cycle_from_bt && config.bt_p_adjust;
    v.belief = bt ? config.prior_bt : config.prior_zw;
    v.cr_p = bt ? config.prior_bt_p : config.prior_zw_p;
    return;
  }
  refresh_cr_p(v, config);
}

void close_cycle(PublicView& v) {
  v.phase = Phase::BT;
  v.cr_round = 0;
  v.cr_nack_streak = 0;
  v.belief.reset();
  std::fill(v.tx_bound.begin(), v.tx_bound.end(), 0);
  for (std::size_t n = 0; n < v.psi.size(); ++n) v.psi[n] = std::min(v.psi[n], v.aoi[n]);
}

void enter_zw(PublicView& v) {
  v.phase = Phase::ZW;
  v.cr_round = 0;
  v.cr_nack_streak = 0;
  v.cycle_from_bt = false;
  v.belief.reset();
  std::fill(v.psi.begin(), v.psi.end(), 0);
  std::fill(v.tx_bound.begin(), v.tx_bound.end(), 0);
}

/// One CR/CE slot elapses: every bound grows by one, ACKed nodes reset.
void step_cycle(PublicView& v) {
  for (auto& a : v.psi) ++a;
  for (auto& a : v.tx_bound) ++a;
  cap_by_aoi(v);
}

void count_slot(PublicView& v, std::optional<NodeId> acked) {
  for (auto& a : v.aoi) ++a;
  if (acked) v.aoi.at(*acked) = 0;
}

void bt_slot(PublicView& v, std::optional<NodeId> acked, const DeltaConfig& config) {
  v.psi = update_max_possible_aoii(v.psi, config, acked);
  cap_by_aoi(v);
  if (v.max_psi() == 0) enter_zw(v);
}

}  // namespace

DeltaConfig DeltaConfig::make(const SystemParams& believed, double k, Variant variant,
                              bool bt_p_adjust) {
  if (!(k > 0.0)) throw std::invalid_argument("DeltaConfig: K must be positive");
  for (double l : believed.lambda())
    if (!(l < 1.0)) throw std::invalid_argument("DeltaConfig: activation probabilities must be below 1");
  DeltaConfig c;
  c.n = believed.n();
  c.lambda = believed.lambda();
  c.epsilon = believed.mean_epsilon();
  c.k = k;
  c.variant = variant;
  c.bt_p_adjust = bt_p_adjust;
  c.log1m_lambda.resize(c.n);
  c.log_threshold.resize(c.n);
  for (int i = 0; i < c.n; ++i) {
    c.log1m_lambda[i] = std::log1p(-std::max(c.lambda[i], 1e-12));
    c.log_threshold[i] = k * c.log1m_lambda[i];
  }
  const double lam = c.mean_lambda();
  c.p_zw = optimal_p_static(c.n, lam, c.epsilon);
  c.p_bt = optimal_p_static(c.n, c.bt_activation(), c.epsilon);
  c.prior_zw = deltaplus_prior(c.n, lam, c.epsilon);
  c.prior_bt = deltaplus_prior(c.n, c.bt_activation(), c.epsilon);
  c.prior_zw_p = deltaplus_optimal_p(c.prior_zw);
  c.prior_bt_p = deltaplus_optimal_p(c.prior_bt);
  return c;
}

double DeltaConfig::mean_lambda() const {
  return std::accumulate(lambda.begin(), lambda.end(), 0.0) / n;
}

double DeltaConfig::bt_activation() const {
  return 1.0 - std::pow(1.0 - mean_lambda(), k / n);
}

Age PublicView::max_possible_aoii(NodeId n) const {
  if (in_cycle(phase)) return std::min(std::max(psi[n], tx_bound[n]), aoi[n]);
  return psi[n];
}

Age PublicView::max_psi() const {
  return psi.empty() ? 0 : *std::max_element(psi.begin(), psi.end());
}

PublicView initial_view(const DeltaConfig& config) {
  PublicView v;
  v.psi.assign(config.n, 0);
  v.tx_bound.assign(config.n, 0);
  v.aoi.assign(config.n, 0);
  refresh_cr_p(v, config);
  return v;
}

ProtocolState initial_state(const DeltaConfig& config, NodeId self) {
  return {std::make_shared<const PublicView>(initial_view(config)), false, self};
}

double highest_aoii_prob(Age theta, std::span<const Age> psi, std::span<const double> lambda,
                         NodeId self) {
  double prob = 1.0;
  for (std::size_t m = 0; m < psi.size(); ++m) {
    if (static_cast<NodeId>(m) == self) continue;
    const Age exponent = std::max<Age>(0, psi[m] - theta + 1);
    prob *= std::pow(1.0 - lambda[m], static_cast<double>(exponent));
  }
  return prob;
}

double log_highest_aoii_prob(Age theta, std::span<const Age> psi,
                             std::span<const double> log1m_lambda, NodeId self) {
  double total = 0.0;
  for (std::size_t m = 0; m < psi.size(); ++m) {
    if (static_cast<NodeId>(m) == self) continue;
    const Age exponent = psi[m] - theta + 1;
    if (exponent > 0) total += static_cast<double>(exponent) * log1m_lambda[m];
  }
  return total;
}

bool bt_transmits(const PublicView& view, const DeltaConfig& config, NodeId self, Age theta) {
  return log_highest_aoii_prob(theta, view.psi, config.log1m_lambda, self) >
         config.log_threshold[self];
}

Age silent_bound(std::span<const Age> psi, const DeltaConfig& config, NodeId self) {
  // Silent at theta iff f(theta) <= F; f is non-decreasing in theta, so the
  // silent set is a prefix of 0..psi[self].
  const auto silent = [&](Age theta) {
    return log_highest_aoii_prob(theta, psi, config.log1m_lambda, self) <=
           config.log_threshold[self];
  };
  const Age top = psi[self];
  if (!silent(0)) return 0;
  if (silent(top)) return top + 1;
  Age lo = 0;    // silent
  Age hi = top;  // not silent
  while (hi - lo > 1) {
    const Age mid = lo + (hi - lo) / 2;
    if (silent(mid))
      lo = mid;
    else
      hi = mid;
  }
  return lo + 1;
}

std::vector<Age> update_max_possible_aoii(std::span<const Age> psi, const DeltaConfig& config,
                                          std::optional<NodeId> acked) {
  std::vector<Age> next(psi.size());
  for (std::size_t n = 0; n < psi.size(); ++n) {
    const auto id = static_cast<NodeId>(n);
    next[n] = acked && *acked == id ? 0 : silent_bound(psi, config, id);
  }
  return next;
}

bool decide_transmit(const ProtocolState& state, const DeltaConfig& config, bool x, Age theta,
                     Rng& rng) {
  if (!x) return false;
  const PublicView& v = *state.view;
  switch (v.phase) {
    case Phase::ZW: return true;
    case Phase::CR: return state.member && bernoulli(rng, v.cr_p);
    case Phase::CE: return state.member;
    case Phase::BT: return bt_transmits(v, config, state.self, theta);
  }
  return false;
}

PublicView handle_missed_feedback(const PublicView& view, const DeltaConfig& config) {
  PublicView v = view;
  count_slot(v, std::nullopt);
  switch (v.phase) {
    case Phase::ZW:
      break;
    case Phase::BT:
      bt_slot(v, std::nullopt, config);
      break;
    case Phase::CR:
      step_cycle(v);
      break;
    case Phase::CE:
      step_cycle(v);
      v.phase = Phase::CR;
      ++v.cr_round;
      v.cr_nack_streak = 0;
      refresh_cr_p(v, config);
      break;
  }
  return v;
}

PublicView resync_from_piggyback(const PublicView& view, const ObservedFeedback& fb,
                                 const DeltaConfig& config) {
  if (!fb.piggyback_phase) return view;
  PublicView v = view;
  const Phase target = *fb.piggyback_phase;
  if (v.phase != target) {
    switch (target) {
      case Phase::ZW:
        enter_zw(v);
        break;
      case Phase::BT:
        if (in_cycle(v.phase)) {
          close_cycle(v);
        } else {
          v.phase = Phase::BT;
          const Age bound = fb.piggyback_max_psi.value_or(0);
          for (std::size_t n = 0; n < v.psi.size(); ++n)
            v.psi[n] = std::max(v.psi[n], std::min(v.aoi[n], bound));
        }
        break;
      case Phase::CR:
      case Phase::CE:
        if (!in_cycle(v.phase)) {
          for (std::size_t n = 0; n < v.psi.size(); ++n) v.tx_bound[n] = v.psi[n] + 1;
          open_cycle(v, v.phase == Phase::BT, config);
          cap_by_aoi(v);
        } else if (target == Phase::CR) {
          ++v.cr_round;
          v.cr_nack_streak = 0;
        }
        v.phase = target;
        refresh_cr_p(v, config);
        break;
    }
  }
  if (v.phase == Phase::BT && fb.piggyback_max_psi) {
    const Age bound = *fb.piggyback_max_psi;
    for (auto& a : v.psi) a = std::min(a, bound);
    if (bound == 0) enter_zw(v);
  }
  return v;
}

PublicView update_public(const PublicView& view, const ObservedFeedback& fb,
                         const DeltaConfig& config) {
  if (fb.kind == FeedbackKind::Missing) return handle_missed_feedback(view, config);

  PublicView v = view;
  const std::optional<NodeId> acked =
      fb.is_ack() ? std::optional<NodeId>(fb.ack_id) : std::nullopt;
  count_slot(v, acked);

  switch (view.phase) {
    case Phase::ZW:
      if (fb.is_nack()) {
        // Silent nodes were in state 0; colliders have AoII 1.
        std::fill(v.tx_bound.begin(), v.tx_bound.end(), 1);
        open_cycle(v, false, config);
        cap_by_aoi(v);
      }
      break;
    case Phase::BT:
      if (fb.is_nack()) {
        for (std::size_t n = 0; n < v.psi.size(); ++n) v.tx_bound[n] = view.psi[n] + 1;
        v.psi = update_max_possible_aoii(view.psi, config, std::nullopt);
        open_cycle(v, true, config);
        cap_by_aoi(v);
      } else {
        bt_slot(v, acked, config);
      }
      break;
    case Phase::CR: {
      step_cycle(v);
      const double p_used = view.cr_p;
      if (fb.is_ack()) {
        v.phase = Phase::CE;
        v.cr_nack_streak = 0;
        update_belief(v, BeliefEvent::AckCR, p_used, config);
      } else if (fb.is_nack()) {
        if (p_used >= 1.0) ++v.cr_nack_streak;
        update_belief(v, BeliefEvent::NackCR, p_used, config);
        refresh_cr_p(v, config);
      } else {
        v.cr_nack_streak = 0;
        update_belief(v, BeliefEvent::SilentCR, p_used, config);
        refresh_cr_p(v, config);
      }
      break;
    }
    case Phase::CE:
      step_cycle(v);
      if (fb.is_nack()) {
        v.phase = Phase::CR;
        ++v.cr_round;
        v.cr_nack_streak = 0;
        update_belief(v, BeliefEvent::NackCE, 0.0, config);
        refresh_cr_p(v, config);
      } else {
        close_cycle(v);
      }
      break;
  }
  return resync_from_piggyback(v, fb, config);
}

bool update_membership(const PublicView& before, const PublicView& after, bool member,
                       const ObservedFeedback& fb, bool did_transmit, bool pending) {
  if (!in_cycle(after.phase)) return false;
  // A NACK opens the cycle with the transmitters. A piggyback resync pulls in
  // nodes that transmitted since their last decoded packet and still hold a report.
  if (!in_cycle(before.phase)) return did_transmit && pending;
  if (fb.is_ack() && did_transmit) return false;
  return member;
}

ProtocolState advance_phase(const ProtocolState& state, const ObservedFeedback& fb,
                            bool did_transmit, bool pending, const DeltaConfig& config) {
  auto after = std::make_shared<const PublicView>(update_public(*state.view, fb, config));
  const bool member =
      update_membership(*state.view, *after, state.member, fb, did_transmit, pending);
  return {std::move(after), member, state.self};
}

}  // namespace delta
