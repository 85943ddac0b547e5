#include "delta/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

namespace delta {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string lower(std::string s) {
  for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad number for " + what + ": '" + s + "'");
  }
}

long long to_int(const std::string& s, const std::string& what) {
  const double v = to_double(s, what);
  if (v != std::floor(v)) throw std::invalid_argument(what + " must be an integer: '" + s + "'");
  return static_cast<long long>(v);
}

bool to_bool(const std::string& s, const std::string& what) {
  const std::string v = lower(s);
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw std::invalid_argument("bad flag for " + what + ": '" + s + "'");
}

/// Shortest text that reads back to the same double.
std::string num(double v) {
  char buf[32];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::string feedback_text(const FeedbackModel& fb) {
  switch (fb.kind) {
    case FeedbackModel::Kind::Ideal: return "ideal";
    case FeedbackModel::Kind::Noisy: return "noisy:" + num(fb.param);
    case FeedbackModel::Kind::Erasure: return "erasure:" + num(fb.param);
    case FeedbackModel::Kind::Deletion: return "deletion:" + num(fb.param);
  }
  return "?";
}

FeedbackModel feedback_from(const std::string& kind, double param) {
  const std::string k = lower(kind);
  if (k == "ideal") return FeedbackModel::ideal();
  if (k == "noisy") return FeedbackModel::noisy(param);
  if (k == "erasure") return FeedbackModel::erasure(param);
  if (k == "deletion") return FeedbackModel::deletion(param);
  throw std::invalid_argument("unknown feedback model: " + kind);
}

bool is_zero_wait(ProtocolKind kind) {
  return kind == ProtocolKind::ZW || kind == ProtocolKind::LZW || kind == ProtocolKind::GZW;
}

SystemParams point_params(const SweepPoint& p) {
  return SystemParams::from_load(p.n, p.rho, p.epsilon);
}

TuneScenario tune_scenario(const SweepSpec& spec, const SweepPoint& p, Age threshold) {
  TuneScenario s;
  s.params = point_params(p);
  s.feedback = p.feedback;
  s.threshold = threshold;
  s.seed = spec.seed;
  return s;
}

SmmVariant variant_of(KMode mode) {
  return mode == KMode::Pessimistic ? SmmVariant::Pessimistic : SmmVariant::Optimistic;
}

}  // namespace

// ---------------------------------------------------------------------------

std::optional<std::string> ConfigSection::get(const std::string& key) const {
  std::optional<std::string> out;
  for (const auto& [k, v] : entries)
    if (k == key) out = v;
  return out;
}

std::vector<ConfigSection> parse_config(const std::string& text) {
  std::vector<ConfigSection> sections;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(lineno) + ": unterminated header");
      sections.push_back({trim(line.substr(1, line.size() - 2)), {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    if (sections.empty()) sections.push_back({"", {}});
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    sections.back().entries.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return sections;
}

std::vector<ConfigSection> load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  for (const auto& token : split(text, ',')) {
    if (token.find(':') == std::string::npos) {
      out.push_back(to_double(token, "values"));
      continue;
    }
    const auto parts = split(token, ':');
    if (parts.size() != 3) throw std::invalid_argument("range must be start:stop:step: " + token);
    const double start = to_double(parts[0], "values");
    const double stop = to_double(parts[1], "values");
    const double step = to_double(parts[2], "values");
    if (!(step > 0.0) || stop < start) throw std::invalid_argument("empty range: " + token);
    const auto count = static_cast<long long>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (long long i = 0; i < count; ++i)
      out.push_back(std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Rho: return "rho";
    case SweepAxis::N: return "N";
    case SweepAxis::Nu: return "nu";
    case SweepAxis::SigmaF: return "sigma_f";
    case SweepAxis::EpsilonF: return "epsilon_f";
    case SweepAxis::OmegaF: return "omega_f";
    case SweepAxis::K: return "K";
  }
  return "?";
}

SweepAxis axis_from_string(const std::string& name) {
  for (auto axis : {SweepAxis::Rho, SweepAxis::N, SweepAxis::Nu, SweepAxis::SigmaF,
                    SweepAxis::EpsilonF, SweepAxis::OmegaF, SweepAxis::K})
    if (lower(to_string(axis)) == lower(name)) return axis;
  throw std::invalid_argument("unknown sweep axis: " + name);
}

ProtocolEntry ProtocolEntry::parse(const std::string& text) {
  ProtocolEntry e;
  e.label = trim(text);
  const auto colon = e.label.find(':');
  e.kind = protocol_from_string(trim(e.label.substr(0, colon)));
  if (colon != std::string::npos) {
    if (!is_delta(e.kind)) throw std::invalid_argument("only DELTA takes a K mode: " + text);
    const std::string mode = lower(trim(e.label.substr(colon + 1)));
    if (mode == "optimistic")
      e.k_mode = KMode::Optimistic;
    else if (mode == "pessimistic")
      e.k_mode = KMode::Pessimistic;
    else if (mode == "fixed")
      e.k_mode = KMode::Fixed;
    else
      throw std::invalid_argument("unknown K mode: " + text);
  }
  return e;
}

SweepSpec SweepSpec::from_section(const ConfigSection& section) {
  SweepSpec s;
  s.name = section.name;
  std::string fb_kind = "ideal";
  double fb_param = 0.0;
  for (const auto& [key, value] : section.entries) {
    if (key == "axis") s.axis = axis_from_string(value);
    else if (key == "values") s.values = parse_values(value);
    else if (key == "protocols") {
      s.protocols.clear();
      for (const auto& p : split(value, ',')) s.protocols.push_back(ProtocolEntry::parse(p));
    } else if (key == "N") s.n = static_cast<int>(to_int(value, key));
    else if (key == "rho") s.rho = to_double(value, key);
    else if (key == "epsilon") s.epsilon = to_double(value, key);
    else if (key == "feedback") fb_kind = value;
    else if (key == "feedback_param") fb_param = to_double(value, key);
    else if (key == "K") s.k = to_double(value, key);
    else if (key == "nu") s.nu = to_double(value, key);
    else if (key == "samples") s.samples = static_cast<int>(to_int(value, key));
    else if (key == "slots") s.slots = to_int(value, key);
    else if (key == "seed") s.seed = static_cast<std::uint64_t>(to_int(value, key));
    else if (key == "thresholds") {
      s.thresholds.clear();
      for (double t : parse_values(value)) s.thresholds.push_back(static_cast<Age>(t));
    } else if (key == "bt_p_adjust") s.bt_p_adjust = to_bool(value, key);
    else if (key == "model_curves") s.model_curves = to_bool(value, key);
    else if (key == "tune_screen_slots") s.tune_budget.screen_slots = to_int(value, key);
    else if (key == "tune_final_slots") s.tune_budget.final_slots = to_int(value, key);
    else if (key == "tune_finalists") s.tune_budget.finalists = static_cast<int>(to_int(value, key));
    else if (key == "tune_coarse_step") s.tune_budget.coarse_step = to_double(value, key);
    else if (key == "out") s.output = value;
    else throw std::invalid_argument("[" + section.name + "] unknown key: " + key);
  }
  s.feedback = feedback_from(fb_kind, fb_param);
  if (s.output.empty()) s.output = (s.name.empty() ? std::string("sweep") : s.name) + ".csv";
  s.validate();
  return s;
}

void SweepSpec::validate() const {
  const std::string where = "sweep '" + name + "': ";
  if (values.empty()) throw std::invalid_argument(where + "no axis values");
  if (!std::is_sorted(values.begin(), values.end()))
    throw std::invalid_argument(where + "axis values must be sorted");
  if (protocols.empty()) throw std::invalid_argument(where + "no protocols");
  if (thresholds.empty()) throw std::invalid_argument(where + "no thresholds");
  if (slots < 1) throw std::invalid_argument(where + "slots must be >= 1");
  if (samples < 1) throw std::invalid_argument(where + "samples must be >= 1");
  if (axis == SweepAxis::K)
    for (const auto& p : protocols)
      if (!is_delta(p.kind)) throw std::invalid_argument(where + "a K sweep takes DELTA only");
  for (double v : values) {
    const SweepPoint p = apply_axis(*this, v);
    if (p.n < 1) throw std::invalid_argument(where + "N must be >= 1");
    SystemParams::from_load(p.n, p.rho, p.epsilon);
    if (!(p.nu >= 0.0 && p.nu < 1.0)) throw std::invalid_argument(where + "nu outside [0,1)");
  }
}

SweepPoint apply_axis(const SweepSpec& spec, double value) {
  SweepPoint p{spec.n, spec.rho, spec.epsilon, spec.feedback, spec.k, spec.nu};
  switch (spec.axis) {
    case SweepAxis::Rho: p.rho = value; break;
    case SweepAxis::N: p.n = static_cast<int>(std::lround(value)); break;
    case SweepAxis::Nu: p.nu = value; break;
    case SweepAxis::SigmaF: p.feedback = FeedbackModel::noisy(value); break;
    case SweepAxis::EpsilonF: p.feedback = FeedbackModel::erasure(value); break;
    case SweepAxis::OmegaF: p.feedback = FeedbackModel::deletion(value); break;
    case SweepAxis::K: p.k = value; break;
  }
  return p;
}

// ---------------------------------------------------------------------------

TuneCache::TuneCache(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.empty() || !std::filesystem::exists(path_)) return;
  std::ifstream in(path_);
  if (!in) throw std::runtime_error("cannot read tuning cache " + path_.string());
  const auto doc = nlohmann::json::parse(in, nullptr, true, true);
  for (const auto& [key, e] : doc.items()) {
    TuneResult r;
    r.config.kind = baseline_kind(protocol_from_string(e.at("kind").get<std::string>()));
    r.config.p1 = e.at("p1").get<double>();
    r.config.p2 = e.at("p2").get<double>();
    r.objective = e.at("objective").get<double>();
    r.evaluations = e.at("evaluations").get<int>();
    entries_[key] = r;
  }
}

std::optional<TuneResult> TuneCache::find(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void TuneCache::put(const std::string& key, const TuneResult& result) { entries_[key] = result; }

void TuneCache::save() const {
  if (path_.empty()) return;
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [key, r] : entries_)
    doc[key] = {{"kind", to_string(r.config.kind)},
                {"p1", r.config.p1},
                {"p2", r.config.p2},
                {"objective", r.objective},
                {"evaluations", r.evaluations}};
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_);
  if (!out) throw std::runtime_error("cannot write tuning cache " + path_.string());
  out << doc.dump(2) << '\n';
}

std::string tune_key(BaselineKind kind, const TuneScenario& scenario, const TuneBudget& budget) {
  const SystemParams& p = scenario.params;
  return to_string(kind) + "|N=" + std::to_string(p.n()) + "|rho=" + num(p.rho()) +
         "|eps=" + num(p.mean_epsilon()) + "|fb=" + feedback_text(scenario.feedback) +
         "|thr=" + std::to_string(scenario.threshold) + "|seed=" + std::to_string(scenario.seed) +
         "|screen=" + std::to_string(budget.screen_slots) +
         "|final=" + std::to_string(budget.final_slots) +
         "|top=" + std::to_string(budget.finalists) + "|coarse=" + num(budget.coarse_step);
}

TuneResult tuned_baseline(BaselineKind kind, const TuneScenario& scenario,
                          const TuneBudget& budget, TuneCache* cache) {
  const std::string key = tune_key(kind, scenario, budget);
  if (cache)
    if (auto hit = cache->find(key)) return *hit;
  TuneResult r = grid_search_params(kind, scenario, budget);
  if (cache) {
    cache->put(key, r);
    cache->save();
  }
  return r;
}

std::vector<TunedEntry> tune_baselines(const SweepSpec& spec, TuneCache* cache, int workers) {
  spec.validate();
  TuneBudget budget = spec.tune_budget;
  budget.workers = workers;
  std::vector<TunedEntry> out;
  std::set<std::string> done;
  for (double v : spec.values) {
    const SweepPoint p = apply_axis(spec, v);
    for (const auto& proto : spec.protocols) {
      if (!is_zero_wait(proto.kind)) continue;
      const BaselineKind kind = baseline_kind(proto.kind);
      for (Age thr : spec.thresholds) {
        const TuneScenario sc = tune_scenario(spec, p, thr);
        const std::string key = tune_key(kind, sc, budget);
        if (!done.insert(key).second) continue;
        out.push_back({kind, key, tuned_baseline(kind, sc, budget, cache)});
      }
    }
  }
  return out;
}

void write_tune_table(const std::vector<TunedEntry>& entries, std::ostream& out) {
  out << "kind,scenario,p1,p2,objective,evaluations\n";
  for (const auto& e : entries)
    out << to_string(e.kind) << ',' << e.scenario << ',' << num(e.result.config.p1) << ','
        << num(e.result.config.p2) << ',' << num(e.result.objective) << ','
        << e.result.evaluations << '\n';
}

// ---------------------------------------------------------------------------

double model_k(int n, double lambda, double epsilon, SmmVariant variant, bool bt_p_adjust) {
  using Key = std::tuple<int, double, double, SmmVariant, bool>;
  static std::mutex mutex;
  static std::map<Key, double> memo;
  const Key key{n, lambda, epsilon, variant, bt_p_adjust};
  {
    std::lock_guard lock(mutex);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
  }
  std::vector<double> ks;
  for (int k = 2; k <= 6 * n; ++k) ks.push_back(k);
  SmmOptions options;
  options.bt_p_adjust = bt_p_adjust;
  const double k =
      optimize_k(n, lambda, epsilon, default_psi_max(n), variant, ks, options).k;
  std::lock_guard lock(mutex);
  memo[key] = k;
  return k;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const SweepOptions& options) {
  spec.validate();
  TuneBudget budget = spec.tune_budget;
  budget.workers = options.workers;
  const std::string axis = to_string(spec.axis);

  struct Job {
    SweepRow row;
    EpisodeConfig config;
    bool heterogeneous = false;
    double nu = 0.0;
    double rho = 0.0;
  };
  std::vector<Job> jobs;
  std::vector<SweepRow> model_rows;

  for (double v : spec.values) {
    const SweepPoint p = apply_axis(spec, v);
    EpisodeConfig base;
    base.params = point_params(p);
    base.feedback = p.feedback;
    base.slots = spec.slots;
    base.seed = spec.seed;
    base.thresholds = spec.thresholds;

    const auto add = [&](const std::string& label, const ProtocolSpec& protocol) {
      Job j;
      j.row.protocol = label;
      j.row.axis = axis;
      j.row.value = v;
      j.row.seed = spec.seed;
      j.row.slots = spec.slots;
      j.config = base;
      j.config.protocol = protocol;
      j.config.debug_assertions = options.debug_assertions && is_delta(protocol.kind);
      j.heterogeneous = spec.axis == SweepAxis::Nu || p.nu > 0.0;
      j.nu = p.nu;
      j.rho = p.rho;
      jobs.push_back(std::move(j));
    };

    for (const auto& proto : spec.protocols) {
      if (is_delta(proto.kind)) {
        ProtocolSpec ps;
        ps.kind = proto.kind;
        ps.bt_p_adjust = spec.bt_p_adjust;
        ps.k = proto.k_mode == KMode::Fixed
                   ? p.k
                   : model_k(p.n, p.rho / p.n, p.epsilon, variant_of(proto.k_mode), spec.bt_p_adjust);
        add(proto.label, ps);
      } else if (is_zero_wait(proto.kind)) {
        const BaselineKind kind = baseline_kind(proto.kind);
        for (Age thr : spec.thresholds) {
          const TuneResult r = tuned_baseline(kind, tune_scenario(spec, p, thr), budget, options.cache);
          add(proto.label + "@" + std::to_string(thr), ProtocolSpec::baseline(r.config));
        }
      } else {
        add(proto.label, ProtocolSpec::baseline({baseline_kind(proto.kind), 1.0, 1.0}));
      }
    }

    if (spec.axis == SweepAxis::K && spec.model_curves) {
      SmmOptions smm;
      smm.bt_p_adjust = spec.bt_p_adjust;
      for (auto variant : {SmmVariant::Pessimistic, SmmVariant::Optimistic}) {
        SweepRow row;
        row.protocol = "SMM:" + to_string(variant);
        row.axis = axis;
        row.value = v;
        row.pi_zw = pi_zw(p.n, p.rho / p.n, p.epsilon, v, default_psi_max(p.n), variant, smm);
        model_rows.push_back(row);
      }
    }
  }

  // Homogeneous episodes run as one batch; heterogeneity sweeps fan out inside.
  std::vector<EpisodeConfig> batch;
  for (const auto& j : jobs)
    if (!j.heterogeneous) batch.push_back(j.config);
  const auto ledgers = run_episodes(batch, options.workers);

  std::vector<SweepRow> rows;
  std::size_t next = 0;
  for (auto& j : jobs) {
    SweepRow row = j.row;
    if (!j.heterogeneous) {
      const MetricsLedger& m = ledgers[next++];
      row.violation = m.violation;
      row.mean_aoii = m.mean_aoii;
      row.mean_aoi = m.mean_aoi;
      if (is_delta(j.config.protocol.kind)) row.pi_zw = m.psi_zw_fraction;
    } else {
      const auto h =
          run_heterogeneity_sweep(j.rho, j.nu, spec.samples, j.config, options.workers);
      for (const auto& [thr, s] : h.violation) row.violation[thr] = s.mean;
      row.mean_aoii = h.mean_aoii.mean;
      double aoi = 0.0;
      double zw = 0.0;
      for (const auto& m : h.samples) {
        aoi += m.mean_aoi;
        zw += m.psi_zw_fraction;
      }
      row.mean_aoi = aoi / static_cast<double>(h.samples.size());
      if (is_delta(j.config.protocol.kind)) row.pi_zw = zw / static_cast<double>(h.samples.size());
    }
    rows.push_back(std::move(row));
  }
  rows.insert(rows.end(), model_rows.begin(), model_rows.end());
  return rows;
}

void write_csv(const std::vector<SweepRow>& rows, const std::vector<Age>& thresholds,
               std::ostream& out) {
  out << "protocol,axis,value";
  for (Age t : thresholds) out << ",V" << t;
  out << ",mean_aoii,mean_aoi,pi_zw,seed,slots\n";
  const auto opt = [](const std::optional<double>& x) { return x ? num(*x) : std::string(); };
  for (const auto& r : rows) {
    out << r.protocol << ',' << r.axis << ',' << num(r.value);
    for (Age t : thresholds) {
      out << ',';
      if (auto it = r.violation.find(t); it != r.violation.end()) out << num(it->second);
    }
    out << ',' << opt(r.mean_aoii) << ',' << opt(r.mean_aoi) << ',' << opt(r.pi_zw) << ','
        << r.seed << ',' << r.slots << '\n';
  }
}

void write_csv(const std::vector<SweepRow>& rows, const std::vector<Age>& thresholds,
               const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_csv(rows, thresholds, out);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------

std::vector<std::string> preset_names() {
  return {"fig2", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9"};
}

std::string preset_config(const std::string& name) {
  static const std::string all =
      "DELTA, DELTA:optimistic, DELTA:pessimistic, DELTA+, MAF, RR, ZW, LZW, GZW";
  static const std::string main = "DELTA, DELTA+, MAF, RR, ZW, LZW, GZW";
  if (name == "fig2")
    return "[fig2_rho20]\naxis = K\nvalues = 20:120:4\nprotocols = DELTA\nrho = 0.2\n"
           "[fig2_rho50]\naxis = K\nvalues = 20:120:4\nprotocols = DELTA\nrho = 0.5\n";
  if (name == "fig4") return "[fig4]\naxis = rho\nvalues = 0.1:0.6:0.05\nprotocols = " + all + "\n";
  if (name == "fig5")
    return "[fig5_rho30]\naxis = N\nvalues = 5:40:5\nrho = 0.3\nprotocols = " + main + "\n" +
           "[fig5_rho50]\naxis = N\nvalues = 5:40:5\nrho = 0.5\nprotocols = " + main + "\n";
  if (name == "fig6")
    return "[fig6]\naxis = nu\nvalues = 0:0.9:0.1\nrho = 0.5\nsamples = 100\nprotocols = " + main +
           "\n";
  if (name == "fig7")
    return "[fig7_rho30]\naxis = sigma_f\nvalues = 0:5:0.5\nrho = 0.3\nprotocols = " + main + "\n" +
           "[fig7_rho50]\naxis = sigma_f\nvalues = 0:5:0.5\nrho = 0.5\nprotocols = " + main + "\n";
  if (name == "fig8")
    return "[fig8_rho30]\naxis = epsilon_f\nvalues = 0:0.2:0.02\nrho = 0.3\nprotocols = " + main +
           "\n" + "[fig8_rho50]\naxis = epsilon_f\nvalues = 0:0.2:0.02\nrho = 0.5\nprotocols = " +
           main + "\n";
  if (name == "fig9")
    return "[fig9]\naxis = omega_f\nvalues = 0:0.2:0.02\nrho = 0.5\nprotocols = " + main + "\n";
  throw std::invalid_argument("unknown preset: " + name);
}

void write_smm_table(int n, double rho, double epsilon, const std::vector<double>& ks,
                     int psi_max, bool bt_p_adjust, std::ostream& out) {
  if (ks.empty()) throw std::invalid_argument("write_smm_table: empty K grid");
  SmmOptions options;
  options.bt_p_adjust = bt_p_adjust;
  out << "variant,K,pi_zw,argmax\n";
  for (auto variant : {SmmVariant::Pessimistic, SmmVariant::Optimistic}) {
    const KOptimum best = optimize_k(n, rho / n, epsilon, psi_max, variant, ks, options);
    for (const auto& [k, value] : best.curve)
      out << to_string(variant) << ',' << num(k) << ',' << num(value) << ','
          << (k == best.k ? 1 : 0) << '\n';
  }
}

}  // namespace delta
