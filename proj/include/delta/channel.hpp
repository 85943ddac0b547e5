#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "delta/core.hpp"

namespace delta {

/// DELTA protocol phase. Declared here because feedback packets carry it.
enum class Phase { ZW, CR, CE, BT };

/// CR and CE form a collision-resolution cycle.
bool in_cycle(Phase phase);

std::string to_string(Phase phase);

enum class OutcomeKind { Silent, Success, Failure };

/// True uplink outcome of a slot.
struct SlotOutcome {
  OutcomeKind kind = OutcomeKind::Silent;
  NodeId winner = -1;
  int transmitter_count = 0;

  static SlotOutcome silent() { return {}; }
  static SlotOutcome success(NodeId winner) { return {OutcomeKind::Success, winner, 1}; }
  static SlotOutcome failure(int transmitters) { return {OutcomeKind::Failure, -1, transmitters}; }

  bool operator==(const SlotOutcome&) const = default;
};

/// Downlink feedback channel models.
struct FeedbackModel {
  enum class Kind { Ideal, Noisy, Erasure, Deletion };

  Kind kind = Kind::Ideal;
  /// sigma_f for Noisy, epsilon_f for Erasure, omega_f for Deletion.
  double param = 0.0;

  static FeedbackModel ideal() { return {}; }
  static FeedbackModel noisy(double sigma_f);
  static FeedbackModel erasure(double epsilon_f);
  static FeedbackModel deletion(double omega_f);

  bool is_ideal() const { return kind == Kind::Ideal; }
  bool operator==(const FeedbackModel&) const = default;
};

std::string to_string(FeedbackModel::Kind kind);

enum class FeedbackKind { AckFor, Nack, Silent, Missing };

/// Feedback as decoded by one node.
struct ObservedFeedback {
  FeedbackKind kind = FeedbackKind::Silent;
  NodeId ack_id = -1;
  std::optional<Phase> piggyback_phase;
  std::optional<Age> piggyback_max_psi;

  static ObservedFeedback ack(NodeId id) { return {FeedbackKind::AckFor, id, {}, {}}; }
  static ObservedFeedback nack() { return {FeedbackKind::Nack, -1, {}, {}}; }
  static ObservedFeedback silent() { return {}; }
  static ObservedFeedback missing() { return {FeedbackKind::Missing, -1, {}, {}}; }

  bool is_ack() const { return kind == FeedbackKind::AckFor; }
  bool is_nack() const { return kind == FeedbackKind::Nack; }

  bool operator==(const ObservedFeedback&) const = default;
};

/// Gateway state attached to every delivered ACK/NACK.
struct Piggyback {
  Phase phase = Phase::ZW;
  Age max_psi = 0;
};

/// Collision channel with per-node erasure of lone transmissions.
SlotOutcome uplink_resolve(std::span<const NodeId> transmitters, std::span<const double> epsilon,
                           Rng& rng);

/// Decoded identity of an ACK meant for node m (0-based) under additive
/// Gaussian noise w on the identifier, wrapped modulo N. Rounds to nearest,
/// ties away from zero.
NodeId noisy_id(NodeId m, int n, double w);

/// Per-node observation of the downlink. `transmitted[n]` tells whether node
/// n sent this slot; a transmitter always attributes an ACK to itself. The
/// piggyback, when given, is attached to every delivered ACK/NACK.
std::vector<ObservedFeedback> feedback_broadcast(const SlotOutcome& outcome,
                                                 const FeedbackModel& model,
                                                 std::optional<Piggyback> piggyback,
                                                 std::span<const char> transmitted, Rng& rng);

/// As above, writing into `observed` (resized to the node count).
void feedback_broadcast(const SlotOutcome& outcome, const FeedbackModel& model,
                        std::optional<Piggyback> piggyback, std::span<const char> transmitted,
                        Rng& rng, std::vector<ObservedFeedback>& observed);

}  // namespace delta
