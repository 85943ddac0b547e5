#include "delta/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace delta {

std::string to_string(Phase phase) {
  switch (phase) {
    case Phase::ZW: return "ZW";
    case Phase::CR: return "CR";
    case Phase::CE: return "CE";
    case Phase::BT: return "BT";
  }
  return "?";
}

std::string to_string(FeedbackModel::Kind kind) {
  switch (kind) {
    case FeedbackModel::Kind::Ideal: return "ideal";
    case FeedbackModel::Kind::Noisy: return "noisy";
    case FeedbackModel::Kind::Erasure: return "erasure";
    case FeedbackModel::Kind::Deletion: return "deletion";
  }
  return "?";
}

FeedbackModel FeedbackModel::noisy(double sigma_f) {
  if (!(sigma_f >= 0.0)) throw std::invalid_argument("noisy feedback: sigma_f must be >= 0");
  return {Kind::Noisy, sigma_f};
}

FeedbackModel FeedbackModel::erasure(double epsilon_f) {
  if (!(epsilon_f >= 0.0 && epsilon_f <= 1.0))
    throw std::invalid_argument("erasure feedback: epsilon_f outside [0,1]");
  return {Kind::Erasure, epsilon_f};
}

FeedbackModel FeedbackModel::deletion(double omega_f) {
  if (!(omega_f >= 0.0 && omega_f <= 1.0))
    throw std::invalid_argument("deletion feedback: omega_f outside [0,1]");
  return {Kind::Deletion, omega_f};
}

SlotOutcome uplink_resolve(std::span<const NodeId> transmitters, std::span<const double> epsilon,
                           Rng& rng) {
  if (transmitters.empty()) return SlotOutcome::silent();
  if (transmitters.size() > 1) return SlotOutcome::failure(static_cast<int>(transmitters.size()));
  const NodeId n = transmitters.front();
  if (n < 0 || static_cast<std::size_t>(n) >= epsilon.size())
    throw std::out_of_range("uplink_resolve: transmitter id out of range");
  if (bernoulli(rng, epsilon[n])) return SlotOutcome::failure(1);
  return SlotOutcome::success(n);
}

NodeId noisy_id(NodeId m, int n, double w) {
  const auto shifted = static_cast<long long>(std::lround(static_cast<double>(m) + w));
  const long long r = shifted % n;
  return static_cast<NodeId>(r < 0 ? r + n : r);
}

std::vector<ObservedFeedback> feedback_broadcast(const SlotOutcome& outcome,
                                                 const FeedbackModel& model,
                                                 std::optional<Piggyback> piggyback,
                                                 std::span<const char> transmitted, Rng& rng) {
  std::vector<ObservedFeedback> observed;
  feedback_broadcast(outcome, model, piggyback, transmitted, rng, observed);
  return observed;
}

void feedback_broadcast(const SlotOutcome& outcome, const FeedbackModel& model,
                        std::optional<Piggyback> piggyback, std::span<const char> transmitted,
                        Rng& rng, std::vector<ObservedFeedback>& observed) {
  const int n = static_cast<int>(transmitted.size());
  ObservedFeedback truth;
  switch (outcome.kind) {
    case OutcomeKind::Silent: truth = ObservedFeedback::silent(); break;
    case OutcomeKind::Success: truth = ObservedFeedback::ack(outcome.winner); break;
    case OutcomeKind::Failure: truth = ObservedFeedback::nack(); break;
  }
  if (piggyback && outcome.kind != OutcomeKind::Silent) {
    truth.piggyback_phase = piggyback->phase;
    truth.piggyback_max_psi = piggyback->max_psi;
  }

  observed.assign(n, truth);
  if (outcome.kind == OutcomeKind::Silent) return;

  switch (model.kind) {
    case FeedbackModel::Kind::Ideal:
      break;
    case FeedbackModel::Kind::Noisy: {
      if (outcome.kind != OutcomeKind::Success) break;
      std::normal_distribution<double> noise(0.0, model.param);
      for (int i = 0; i < n; ++i) {
        // One noise draw per listener keeps the stream aligned across runs.
        const double w = model.param > 0.0 ? noise(rng) : 0.0;
        observed[i].ack_id = transmitted[i] ? i : noisy_id(outcome.winner, n, w);
      }
      break;
    }
    case FeedbackModel::Kind::Erasure:
      for (int i = 0; i < n; ++i)
        if (bernoulli(rng, model.param)) observed[i] = ObservedFeedback::missing();
      break;
    case FeedbackModel::Kind::Deletion:
      for (int i = 0; i < n; ++i)
        if (bernoulli(rng, model.param)) observed[i] = ObservedFeedback::silent();
      break;
  }
}

}  // namespace delta
