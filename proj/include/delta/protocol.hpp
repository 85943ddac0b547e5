#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "delta/channel.hpp"
#include "delta/core.hpp"
#include "delta/cr_analysis.hpp"

namespace delta {

enum class Variant { Delta, DeltaPlus };

/// Static configuration shared by every node running DELTA. Activation
/// probabilities are the protocol's belief, which may differ from the
/// ground truth driving the simulation.
struct DeltaConfig {
  int n = 0;
  std::vector<double> lambda;
  double epsilon = 0.0;
  /// Slot budget; the per-node belief threshold is F_n = (1 - lambda_n)^K.
  double k = 0.0;
  Variant variant = Variant::Delta;
  /// Re-optimize the CR probabilities for cycles opened by a BT collision.
  bool bt_p_adjust = false;

  std::vector<double> log1m_lambda;   // log(1 - lambda_n)
  std::vector<double> log_threshold;  // log F_n
  std::vector<double> p_zw;           // CR probabilities after a ZW failure
  std::vector<double> p_bt;           // CR probabilities after a BT failure
  ColliderBelief prior_zw;
  ColliderBelief prior_bt;
  double prior_zw_p = 1.0;  // DELTA+ first-slot probability under each prior
  double prior_bt_p = 1.0;

  /// Builds a configuration from believed parameters. The scalar epsilon is
  /// the mean of the per-node values.
  static DeltaConfig make(const SystemParams& believed, double k, Variant variant = Variant::Delta,
                          bool bt_p_adjust = false);

  /// Per-node activation probability inside BT, 1 - (1 - lambda)^(K/N).
  double bt_activation() const;
  double mean_lambda() const;
};

/// Consecutive CR failures at p = 1 after which the phase falls back to a
/// randomized probability. Only reachable when feedback is imperfect or a
/// lone transmitter is erased repeatedly.
inline constexpr int kStallNacks = 3;
inline constexpr double kStallFallbackP = 0.5;

/// Everything a node derives from public announcements. Under ideal feedback
/// this is identical across nodes.
struct PublicView {
  Phase phase = Phase::ZW;
  /// Maximum possible AoII per node. During a CR/CE cycle this is the bound
  /// for nodes outside the collision set.
  std::vector<Age> psi;
  /// During a cycle, the bound for nodes that may be in the collision set.
  std::vector<Age> tx_bound;
  /// Slots since the last ACK heard for each node.
  std::vector<Age> aoi;
  int cr_round = 0;
  int cr_nack_streak = 0;
  bool cycle_from_bt = false;
  std::optional<ColliderBelief> belief;
  /// Transmission probability of members in the next CR slot.
  double cr_p = 1.0;

  bool operator==(const PublicView&) const = default;

  /// Maximum possible AoII of node n consistent with this view.
  Age max_possible_aoii(NodeId n) const;
  Age max_psi() const;
};

struct ProtocolState {
  std::shared_ptr<const PublicView> view;
  /// Collision-set membership.
  bool member = false;
  NodeId self = 0;

  Phase phase() const { return view->phase; }
};

PublicView initial_view(const DeltaConfig& config);
ProtocolState initial_state(const DeltaConfig& config, NodeId self);

/// Probability that a node with AoII theta has the highest AoII given the
/// public bounds psi: prod over m != self of (1 - lambda_m)^[psi_m - theta + 1]^+.
double highest_aoii_prob(Age theta, std::span<const Age> psi, std::span<const double> lambda,
                         NodeId self);

/// Log of highest_aoii_prob using precomputed log(1 - lambda).
double log_highest_aoii_prob(Age theta, std::span<const Age> psi,
                             std::span<const double> log1m_lambda, NodeId self);

/// Whether a node with AoII theta transmits in BT.
bool bt_transmits(const PublicView& view, const DeltaConfig& config, NodeId self, Age theta);

/// New bound for node `self` after it stayed silent in a BT slot: one more
/// than the largest AoII at which it would have stayed silent, or 0 when no
/// such AoII exists.
Age silent_bound(std::span<const Age> psi, const DeltaConfig& config, NodeId self);

/// BT-slot update of the bound vector. `acked` is the node whose report was
/// acknowledged, if any; every other node is treated as silent (colliders
/// are reset later when their reports get through).
std::vector<Age> update_max_possible_aoii(std::span<const Age> psi, const DeltaConfig& config,
                                          std::optional<NodeId> acked);

/// Transmission decision for the slot. `x` is whether the node has an
/// unreported anomaly, `theta` its AoII before this slot's increment.
bool decide_transmit(const ProtocolState& state, const DeltaConfig& config, bool x, Age theta,
                     Rng& rng);

/// Public part of the transition after observing `fb`.
PublicView update_public(const PublicView& view, const ObservedFeedback& fb,
                         const DeltaConfig& config);

/// Public transition when the feedback of a sent message was not decoded.
PublicView handle_missed_feedback(const PublicView& view, const DeltaConfig& config);

/// Aligns the phase (and in BT the maximum bound) with the gateway state
/// carried by a decoded feedback packet.
PublicView resync_from_piggyback(const PublicView& view, const ObservedFeedback& fb,
                                 const DeltaConfig& config);

/// Collision-set membership after the slot. `did_transmit` covers every
/// transmission since the node last decoded a packet.
bool update_membership(const PublicView& before, const PublicView& after, bool member,
                       const ObservedFeedback& fb, bool did_transmit, bool pending);

/// Full per-node transition. `pending` is whether the node still holds an
/// anomaly it has not seen acknowledged.
ProtocolState advance_phase(const ProtocolState& state, const ObservedFeedback& fb,
                            bool did_transmit, bool pending, const DeltaConfig& config);

}  // namespace delta
