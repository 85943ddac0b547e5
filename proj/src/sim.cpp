#include "delta/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace delta {

namespace {

constexpr std::uint64_t kDecisionStream = 1ull << 32;
constexpr std::uint64_t kChannelStream = 1ull << 33;
constexpr std::uint64_t kFeedbackStream = (1ull << 33) + 1;
constexpr std::uint64_t kLambdaStream = (1ull << 33) + 2;

struct Streams {
  std::vector<Rng> anomaly;
  std::vector<Rng> decision;
  Rng channel;
  Rng feedback;

  Streams(std::uint64_t seed, int n)
      : channel(make_stream(seed, kChannelStream)), feedback(make_stream(seed, kFeedbackStream)) {
    for (int i = 0; i < n; ++i) {
      anomaly.push_back(make_stream(seed, static_cast<std::uint64_t>(i)));
      decision.push_back(make_stream(seed, kDecisionStream + static_cast<std::uint64_t>(i)));
    }
  }
};

/// Node-side bookkeeping shared by every protocol: what the node itself
/// believes about its own report.
struct LocalReport {
  bool pending = false;
  Age theta = 0;
};

ObservedFeedback truth_feedback(const SlotOutcome& outcome) {
  switch (outcome.kind) {
    case OutcomeKind::Silent: return ObservedFeedback::silent();
    case OutcomeKind::Success: return ObservedFeedback::ack(outcome.winner);
    case OutcomeKind::Failure: return ObservedFeedback::nack();
  }
  return ObservedFeedback::silent();
}

class Accumulator {
 public:
  Accumulator(const EpisodeConfig& config)
      : config_(config), n_(config.params.n()), per_node_(config.thresholds.size()) {
    for (auto& v : per_node_) v.assign(n_, 0);
  }

  void record_outcome(const SlotOutcome& outcome) {
    switch (outcome.kind) {
      case OutcomeKind::Silent: ++silent_; break;
      case OutcomeKind::Success: ++successes_; break;
      case OutcomeKind::Failure: ++collisions_; break;
    }
  }

  void record_phase(Phase phase) { ++phase_slots_[phase]; }

  void record_nodes(const std::vector<NodeRecord>& nodes) {
    for (const auto& rec : nodes) {
      sum_theta_ += rec.theta;
      sum_delta_ += rec.delta;
      for (std::size_t k = 0; k < config_.thresholds.size(); ++k)
        if (violation_indicator(rec.theta, config_.thresholds[k])) ++per_node_[k][rec.id];
    }
  }

  MetricsLedger finish(std::int64_t lockstep, std::int64_t bound) const {
    MetricsLedger m;
    m.slots = config_.slots;
    m.n = n_;
    const double slots = static_cast<double>(config_.slots);
    const double node_slots = slots * n_;
    for (std::size_t k = 0; k < config_.thresholds.size(); ++k) {
      std::int64_t total = 0;
      std::vector<double> per_node(n_);
      for (int i = 0; i < n_; ++i) {
        total += per_node_[k][i];
        per_node[i] = static_cast<double>(per_node_[k][i]) / slots;
      }
      m.violation[config_.thresholds[k]] = static_cast<double>(total) / node_slots;
      m.per_node_violation[config_.thresholds[k]] = std::move(per_node);
    }
    m.mean_aoii = static_cast<double>(sum_theta_) / node_slots;
    m.mean_aoi = static_cast<double>(sum_delta_) / node_slots;
    for (const auto& [phase, count] : phase_slots_)
      m.phase_occupancy[phase] = static_cast<double>(count) / slots;
    if (auto it = m.phase_occupancy.find(Phase::ZW); it != m.phase_occupancy.end())
      m.psi_zw_fraction = it->second;
    m.collisions = collisions_;
    m.successes = successes_;
    m.silent = silent_;
    m.lockstep_violations = lockstep;
    m.bound_violations = bound;
    return m;
  }

 private:
  const EpisodeConfig& config_;
  int n_;
  std::vector<std::vector<std::int64_t>> per_node_;
  std::map<Phase, std::int64_t> phase_slots_;
  std::int64_t sum_theta_ = 0;
  std::int64_t sum_delta_ = 0;
  std::int64_t collisions_ = 0;
  std::int64_t successes_ = 0;
  std::int64_t silent_ = 0;
};

/// Shared driver state: ground truth, local reports, random streams.
class Episode {
 public:
  Episode(const EpisodeConfig& config, bool throw_on_violation)
      : config_(config),
        n_(config.params.n()),
        streams_(config.seed, n_),
        nodes_(n_),
        local_(n_),
        transmitted_(n_, 0),
        acc_(config),
        throw_(throw_on_violation) {
    for (int i = 0; i < n_; ++i) nodes_[i].id = i;
  }

  MetricsLedger run() {
    const ProtocolKind kind = config_.protocol.kind;
    if (is_delta(kind)) return run_delta();
    if (kind == ProtocolKind::RR || kind == ProtocolKind::MAF) return run_scheduled();
    return run_zero_wait();
  }

 private:
  /// Step (1): anomalies. Returns per-node flags of fresh activations.
  void sample_anomalies() {
    for (int i = 0; i < n_; ++i) {
      const bool before = nodes_[i].x;
      // The node sees its own events, not whether the gateway is up to date.
      const bool event = step_anomaly(false, config_.params.lambda(i), streams_.anomaly[i]);
      nodes_[i].x = before || event;
      fresh_[i] = !before && event && !local_[i].pending;
      if (event && !local_[i].pending) local_[i] = {true, 0};
    }
  }

  SlotOutcome resolve_uplink() {
    ids_.clear();
    for (int i = 0; i < n_; ++i)
      if (transmitted_[i]) ids_.push_back(i);
    return uplink_resolve(ids_, config_.params.epsilon(), streams_.channel);
  }

  /// Clears the local report on a decoded ACK of the node's own packet.
  void consume_ack(NodeId i, const ObservedFeedback& fb) {
    if (transmitted_[i] && fb.is_ack() && fb.ack_id == i) local_[i] = {};
  }

  /// What a DELTA node acts on. A transmitter knows the slot was not silent,
  /// so under deletion a Silent observation in ZW, CR or BT is a lost packet.
  /// In CE the Silent observation stands and closes the cycle.
  ObservedFeedback local_feedback(NodeId i, const ObservedFeedback& fb, Phase phase) const {
    if (transmitted_[i] && fb.kind == FeedbackKind::Silent && phase != Phase::CE)
      return ObservedFeedback::missing();
    return fb;
  }

  /// Step (5): ages, local AoII, metrics, observer.
  void finish_slot(std::int64_t t, const SlotOutcome& outcome, NodeId polled,
                   std::optional<Phase> phase) {
    for (int i = 0; i < n_; ++i) {
      const bool success = outcome.kind == OutcomeKind::Success && outcome.winner == i;
      nodes_[i] = update_ages(nodes_[i], success);
      if (local_[i].pending) ++local_[i].theta;
    }
    acc_.record_outcome(outcome);
    acc_.record_nodes(nodes_);
    if (phase) acc_.record_phase(*phase);
    if (config_.observer) {
      SlotTrace trace;
      trace.t = t;
      trace.outcome = outcome;
      trace.polled = polled;
      trace.phase = phase;
      trace.nodes = &nodes_;
      trace.transmitted = &transmitted_;
      config_.observer(trace);
    }
  }

  MetricsLedger run_delta();
  MetricsLedger run_scheduled();
  MetricsLedger run_zero_wait();

  void violation(std::int64_t t, std::vector<NodeId> who, const std::string& what,
                 std::int64_t& counter) {
    ++counter;
    if (throw_) throw InvariantViolation(t, std::move(who), what);
  }

  const EpisodeConfig& config_;
  int n_;
  Streams streams_;
  std::vector<NodeRecord> nodes_;
  std::vector<LocalReport> local_;
  std::vector<char> transmitted_;
  std::vector<ObservedFeedback> observed_;
  std::vector<char> fresh_ = std::vector<char>(static_cast<std::size_t>(n_), 0);
  std::vector<NodeId> ids_;
  Accumulator acc_;
  bool throw_;
  std::int64_t lockstep_violations_ = 0;
  std::int64_t bound_violations_ = 0;
};

using ViewPtr = std::shared_ptr<const PublicView>;

MetricsLedger Episode::run_delta() {
  const ProtocolSpec& spec = config_.protocol;
  const Variant variant = spec.kind == ProtocolKind::DeltaPlus ? Variant::DeltaPlus : Variant::Delta;
  const double k = spec.k > 0.0 ? spec.k : default_k(n_);
  const DeltaConfig dc =
      DeltaConfig::make(spec.believed.value_or(config_.params), k, variant, spec.bt_p_adjust);
  const bool piggyback = config_.piggyback.value_or(!config_.feedback.is_ideal());
  const bool check = config_.debug_assertions && config_.feedback.is_ideal();
  const bool independent = config_.debug_assertions;

  std::vector<ProtocolState> states;
  for (int i = 0; i < n_; ++i) states.push_back(initial_state(dc, i));
  if (!independent)
    for (int i = 1; i < n_; ++i) states[i].view = states[0].view;
  auto gateway = std::make_shared<const PublicView>(initial_view(dc));

  struct MemoEntry {
    const PublicView* from;
    ObservedFeedback fb;
    ViewPtr to;
  };
  std::vector<MemoEntry> memo;
  std::vector<ViewPtr> fresh_views;
  std::vector<char> unsynced_tx(static_cast<std::size_t>(n_), 0);

  for (std::int64_t t = 0; t < config_.slots; ++t) {
    const Phase phase_at_start = gateway->phase;
    sample_anomalies();

    for (int i = 0; i < n_; ++i)
      transmitted_[i] = decide_transmit(states[i], dc, local_[i].pending,
                                        local_[i].theta, streams_.decision[i]);
    const SlotOutcome outcome = resolve_uplink();

    const ObservedFeedback truth = truth_feedback(outcome);
    gateway = std::make_shared<const PublicView>(update_public(*gateway, truth, dc));
    std::optional<Piggyback> pb;
    if (piggyback) pb = Piggyback{gateway->phase, gateway->max_psi()};
    feedback_broadcast(outcome, config_.feedback, pb, transmitted_, streams_.feedback, observed_);
    const auto& observed = observed_;

    memo.clear();
    fresh_views.clear();
    for (int i = 0; i < n_; ++i) {
      ProtocolState& st = states[i];
      consume_ack(i, observed[i]);
      const ObservedFeedback fb = local_feedback(i, observed[i], st.view->phase);
      ViewPtr next;
      if (!independent) {
        for (const auto& e : memo)
          if (e.from == st.view.get() && e.fb == fb) {
            next = e.to;
            break;
          }
      }
      if (!next) {
        PublicView v = update_public(*st.view, fb, dc);
        // Views that coincide by value share storage so the memo keeps hitting.
        if (!independent) {
          if (v == *gateway) next = gateway;
          for (const auto& f : fresh_views)
            if (!next && *f == v) next = f;
        }
        if (!next) {
          next = std::make_shared<const PublicView>(std::move(v));
          if (!independent) fresh_views.push_back(next);
        }
        if (!independent) memo.push_back({st.view.get(), fb, next});
      }
      const bool sent = transmitted_[i] || unsynced_tx[i];
      st.member = update_membership(*st.view, *next, st.member, fb, sent, local_[i].pending);
      // Until the node decodes an ACK or NACK it only knows it may be among
      // the colliders if it transmitted.
      unsynced_tx[i] = sent && !observed[i].is_ack() && !observed[i].is_nack();
      st.view = std::move(next);
    }

    finish_slot(t, outcome, -1, phase_at_start);

    if (check) {
      std::vector<NodeId> diverged;
      for (int i = 1; i < n_; ++i)
        if (!(*states[i].view == *states[0].view)) diverged.push_back(i);
      if (!diverged.empty()) {
        diverged.insert(diverged.begin(), 0);
        violation(t, diverged, "public views diverged", lockstep_violations_);
      }
      std::vector<NodeId> over;
      for (int i = 0; i < n_; ++i)
        if (nodes_[i].theta > states[i].view->max_possible_aoii(i)) over.push_back(i);
      if (!over.empty()) violation(t, over, "AoII above its public bound", bound_violations_);
    }
  }
  return acc_.finish(lockstep_violations_, bound_violations_);
}

MetricsLedger Episode::run_scheduled() {
  const bool maf = config_.protocol.kind == ProtocolKind::MAF;
  std::vector<Age> gateway_aoi(n_, 0);
  std::optional<NodeId> lost;
  std::normal_distribution<double> noise(0.0, config_.feedback.param);

  for (std::int64_t t = 0; t < config_.slots; ++t) {
    sample_anomalies();

    NodeId polled = 0;
    if (maf) {
      polled = maf_poll(gateway_aoi, lost);
      // The poll travels over the downlink and is decoded like feedback.
      for (int i = 0; i < n_; ++i) {
        NodeId heard = polled;
        switch (config_.feedback.kind) {
          case FeedbackModel::Kind::Ideal: break;
          case FeedbackModel::Kind::Noisy:
            if (config_.feedback.param > 0.0)
              heard = noisy_id(polled, n_, noise(streams_.feedback));
            break;
          case FeedbackModel::Kind::Erasure:
          case FeedbackModel::Kind::Deletion:
            if (bernoulli(streams_.feedback, config_.feedback.param)) heard = -1;
            break;
        }
        transmitted_[i] = heard == i;
      }
    } else {
      polled = rr_poll(t, n_);
      for (int i = 0; i < n_; ++i) transmitted_[i] = i == polled && local_[i].pending;
    }

    const SlotOutcome outcome = resolve_uplink();
    feedback_broadcast(outcome, config_.feedback, std::nullopt, transmitted_, streams_.feedback,
                       observed_);
    const auto& observed = observed_;
    for (int i = 0; i < n_; ++i) consume_ack(i, observed[i]);

    for (auto& a : gateway_aoi) ++a;
    if (outcome.kind == OutcomeKind::Success) gateway_aoi[outcome.winner] = 0;
    const bool polled_heard = outcome.kind == OutcomeKind::Success && outcome.winner == polled;
    lost = polled_heard ? std::nullopt : std::optional<NodeId>(polled);

    finish_slot(t, outcome, polled, std::nullopt);
  }
  return acc_.finish(0, 0);
}

MetricsLedger Episode::run_zero_wait() {
  const BaselineConfig bc = config_.protocol.baseline_config();
  std::vector<char> failed_local(n_, 0);
  std::vector<char> backoff(n_, 0);

  for (std::int64_t t = 0; t < config_.slots; ++t) {
    sample_anomalies();
    for (int i = 0; i < n_; ++i)
      if (fresh_[i]) failed_local[i] = false;

    for (int i = 0; i < n_; ++i)
      transmitted_[i] = zw_family_decide(bc.kind, local_[i].pending, failed_local[i], backoff[i],
                                         bc.p1, bc.p2, streams_.decision[i]);
    const SlotOutcome outcome = resolve_uplink();
    feedback_broadcast(outcome, config_.feedback, std::nullopt, transmitted_, streams_.feedback,
                       observed_);
    const auto& observed = observed_;

    for (int i = 0; i < n_; ++i) {
      const ObservedFeedback& fb = observed[i];
      if (transmitted_[i]) {
        const bool acked = fb.is_ack() && fb.ack_id == i;
        failed_local[i] = !acked;
      }
      consume_ack(i, fb);
      if (fb.is_nack())
        backoff[i] = true;
      else if (fb.is_ack())
        backoff[i] = false;
    }
    finish_slot(t, outcome, -1, std::nullopt);
  }
  return acc_.finish(0, 0);
}

SpreadStat spread(const std::vector<double>& xs) {
  SpreadStat s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

}  // namespace

std::string to_string(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::Delta: return "DELTA";
    case ProtocolKind::DeltaPlus: return "DELTA+";
    case ProtocolKind::RR: return "RR";
    case ProtocolKind::MAF: return "MAF";
    case ProtocolKind::ZW: return "ZW";
    case ProtocolKind::LZW: return "LZW";
    case ProtocolKind::GZW: return "GZW";
  }
  return "?";
}

ProtocolKind protocol_from_string(const std::string& name) {
  std::string up;
  for (char ch : name) up += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  for (auto kind : {ProtocolKind::Delta, ProtocolKind::DeltaPlus, ProtocolKind::RR,
                    ProtocolKind::MAF, ProtocolKind::ZW, ProtocolKind::LZW, ProtocolKind::GZW})
    if (to_string(kind) == up) return kind;
  if (up == "DELTAPLUS" || up == "DELTA_PLUS") return ProtocolKind::DeltaPlus;
  throw std::invalid_argument("unknown protocol: " + name);
}

bool is_delta(ProtocolKind kind) {
  return kind == ProtocolKind::Delta || kind == ProtocolKind::DeltaPlus;
}

BaselineKind baseline_kind(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::RR: return BaselineKind::RR;
    case ProtocolKind::MAF: return BaselineKind::MAF;
    case ProtocolKind::ZW: return BaselineKind::ZW;
    case ProtocolKind::LZW: return BaselineKind::LZW;
    case ProtocolKind::GZW: return BaselineKind::GZW;
    default: throw std::invalid_argument("baseline_kind: " + to_string(kind) + " is not a baseline");
  }
}

ProtocolSpec ProtocolSpec::delta(double k, Variant variant) {
  ProtocolSpec s;
  s.kind = variant == Variant::DeltaPlus ? ProtocolKind::DeltaPlus : ProtocolKind::Delta;
  s.k = k;
  return s;
}

ProtocolSpec ProtocolSpec::baseline(const BaselineConfig& config) {
  ProtocolSpec s;
  switch (config.kind) {
    case BaselineKind::RR: s.kind = ProtocolKind::RR; break;
    case BaselineKind::MAF: s.kind = ProtocolKind::MAF; break;
    case BaselineKind::ZW: s.kind = ProtocolKind::ZW; break;
    case BaselineKind::LZW: s.kind = ProtocolKind::LZW; break;
    case BaselineKind::GZW: s.kind = ProtocolKind::GZW; break;
  }
  s.p1 = config.p1;
  s.p2 = config.p2;
  return s;
}

BaselineConfig ProtocolSpec::baseline_config() const {
  return {baseline_kind(kind), p1, p2};
}

double default_k(int n) { return std::ceil(2.5 * n); }

void EpisodeConfig::validate() const {
  if (slots < 1) throw std::invalid_argument("episode: slots must be >= 1");
  if (thresholds.empty()) throw std::invalid_argument("episode: thresholds must be non-empty");
  if (protocol.k < 0.0) throw std::invalid_argument("episode: K must be >= 0");
  if (protocol.believed && protocol.believed->n() != params.n())
    throw std::invalid_argument("episode: believed parameters have the wrong node count");
  if (!is_delta(protocol.kind)) protocol.baseline_config().validate();
}

InvariantViolation::InvariantViolation(std::int64_t slot, std::vector<NodeId> nodes,
                                       const std::string& what)
    : std::runtime_error([&] {
        std::string msg = "slot " + std::to_string(slot) + ": " + what + " (nodes";
        for (NodeId n : nodes) msg += " " + std::to_string(n);
        return msg + ")";
      }()),
      slot_(slot),
      nodes_(std::move(nodes)) {}

MetricsLedger run_episode(const EpisodeConfig& config) {
  config.validate();
  return Episode(config, true).run();
}

MetricsLedger run_episode_counting(const EpisodeConfig& config) {
  config.validate();
  return Episode(config, false).run();
}

std::vector<MetricsLedger> run_episodes(const std::vector<EpisodeConfig>& configs, int workers) {
  std::vector<MetricsLedger> out(configs.size());
  workers = std::max(1, std::min<int>(workers, static_cast<int>(configs.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < configs.size(); ++i) out[i] = run_episode(configs[i]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < configs.size();) {
        try {
          out[i] = run_episode(configs[i]);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
  return out;
}

HeterogeneityResult run_heterogeneity_sweep(double rho, double nu, int samples,
                                            const EpisodeConfig& base, int workers) {
  if (!(nu >= 0.0 && nu < 1.0)) throw std::invalid_argument("heterogeneity: nu outside [0,1)");
  if (samples < 1) throw std::invalid_argument("heterogeneity: samples must be >= 1");
  const int n = base.params.n();
  const double mid = rho / n;
  const double lo = (1.0 - nu) * mid;
  const double hi = (1.0 + nu) * mid;

  std::vector<EpisodeConfig> configs;
  for (int s = 0; s < samples; ++s) {
    EpisodeConfig c = base;
    c.seed = base.seed + static_cast<std::uint64_t>(s);
    Rng rng = make_stream(c.seed, kLambdaStream);
    std::vector<double> lambda(n);
    for (auto& l : lambda) l = lo + (hi - lo) * uniform01(rng);
    c.params = SystemParams(std::move(lambda), base.params.epsilon());
    c.protocol.believed = SystemParams(std::vector<double>(n, mid), base.params.epsilon());
    configs.push_back(std::move(c));
  }

  HeterogeneityResult r;
  r.samples = run_episodes(configs, workers);
  for (Age thr : base.thresholds) {
    std::vector<double> xs;
    for (const auto& m : r.samples) xs.push_back(m.violation.at(thr));
    r.violation[thr] = spread(xs);
  }
  std::vector<double> aoii;
  for (const auto& m : r.samples) aoii.push_back(m.mean_aoii);
  r.mean_aoii = spread(aoii);
  return r;
}

}  // namespace delta
