#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "avr/core.hpp"
#include "avr/costmodel.hpp"
#include "avr/difficulty.hpp"
#include "avr/errors.hpp"
#include "avr/rng.hpp"

namespace avr::sim {

// P[correct] = sigmoid((theta - d) / gamma); gamma controls transition sharpness.
inline double correctness_probability(double d, double theta, double gamma) {
  if (gamma <= 0.0) fail(Errc::out_of_range, "gamma must be positive");
  const double z = std::clamp((theta - d) / gamma, -700.0, 700.0);
  return 1.0 / (1.0 + std::exp(-z));
}

// Cheapest model whose capability clears d plus the safety margin; nullopt when
// none qualifies (callers report forced-largest with a shortfall flag).
inline std::optional<int> oracle_policy(double d, const ModelPool& pool, double delta) {
  if (delta < 0.0) fail(Errc::out_of_range, "delta must be non-negative");
  for (const auto& m : pool.models())
    if (m.capability >= d + delta) return m.tier;
  return std::nullopt;
}

// acc(m_S | memory) >= acc(m_L) - epsilon.
inline bool check_equalization(double acc_small_with_mem, double acc_large, double epsilon) {
  if (epsilon < 0.0) fail(Errc::out_of_range, "epsilon must be non-negative");
  return acc_small_with_mem >= acc_large - epsilon;
}

enum class MemoryMode { cold, warm, warming };

inline const char* memory_mode_name(MemoryMode m) {
  switch (m) {
    case MemoryMode::cold: return "cold";
    case MemoryMode::warm: return "warm";
    case MemoryMode::warming: return "warming";
  }
  return "cold";
}

struct MixtureComponent {
  double weight = 1.0;
  enum class Dist { beta, uniform } dist = Dist::uniform;
  int a = 1;
  int b = 1;
  double lo = 0.0;
  double hi = 1.0;
  std::string label = "action";
};

// Difficulty distribution: weighted mixture of (rescaled) Beta / uniform parts.
struct DifficultyMixture {
  std::vector<MixtureComponent> components;

  void validate() const {
    if (components.empty()) fail(Errc::bad_config, "difficulty mixture needs >= 1 component");
    double total = 0.0;
    for (const auto& c : components) {
      if (c.weight <= 0.0) fail(Errc::bad_config, "mixture weights must be positive");
      if (c.lo < 0.0 || c.hi > 1.0 || c.lo >= c.hi)
        fail(Errc::bad_config, "mixture support must satisfy 0 <= lo < hi <= 1");
      if (c.dist == MixtureComponent::Dist::beta && (c.a < 1 || c.b < 1 || c.a + c.b > 13))
        fail(Errc::bad_config, "beta shapes must be integers in [1, 12] with a+b <= 13");
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) fail(Errc::bad_config, "mixture weights must sum to 1");
  }

  // Returns (difficulty, component index).
  std::pair<double, std::size_t> sample(CallRng& rng) const {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t pick = components.size() - 1;
    for (std::size_t i = 0; i < components.size(); ++i) {
      acc += components[i].weight;
      if (u < acc) {
        pick = i;
        break;
      }
    }
    const auto& c = components[pick];
    const double x =
        c.dist == MixtureComponent::Dist::beta ? rng.beta_int(c.a, c.b) : rng.uniform();
    return {c.lo + x * (c.hi - c.lo), pick};
  }
};

// Confidence generator: difficulty maps to a band by cutoff, memory lifts the
// knowledge-dependent band, and genuinely hard visuals stay low with or without
// memory. A small noise rate lets otherwise-easy calls probe poorly, which is
// what difficulty pre-routing rescues.
struct BandParams {
  double high_lo = 0.93, high_hi = 0.97;
  double mid_cold_lo = 0.82, mid_cold_hi = 0.84;
  bool has_warm_band = true;
  double mid_warm_lo = 0.95, mid_warm_hi = 0.96;
  double low_lo = 0.70, low_hi = 0.82;
  double memory_shift = 0.13;  // used when no explicit warm band is configured
  double high_cutoff = 0.4;    // d below this draws from the high band
  double low_cutoff = 0.7;     // d at or above this draws from the low band
  double easy_noise_rate = 0.0;
  double noise_lo = 0.70, noise_hi = 0.78;
};

inline double generate_confidence(double d, MemoryMode mode, const BandParams& bands,
                                  CallRng& rng, double warming_scale = 1.0) {
  const double shift_scale =
      mode == MemoryMode::cold ? 0.0 : mode == MemoryMode::warm ? 1.0 : warming_scale;
  if (d < bands.high_cutoff) {
    const bool noisy = rng.bernoulli(bands.easy_noise_rate);
    const double u = rng.uniform();
    if (noisy) return bands.noise_lo + u * (bands.noise_hi - bands.noise_lo);
    return bands.high_lo + u * (bands.high_hi - bands.high_lo);
  }
  if (d >= bands.low_cutoff) {
    return bands.low_lo + rng.uniform() * (bands.low_hi - bands.low_lo);
  }
  const double u = rng.uniform();
  if (bands.has_warm_band) {
    const double lo = bands.mid_cold_lo + (bands.mid_warm_lo - bands.mid_cold_lo) * shift_scale;
    const double hi = bands.mid_cold_hi + (bands.mid_warm_hi - bands.mid_cold_hi) * shift_scale;
    return lo + u * (hi - lo);
  }
  const double cold = bands.mid_cold_lo + u * (bands.mid_cold_hi - bands.mid_cold_lo);
  return std::clamp(cold + bands.memory_shift * shift_scale, 0.0, 1.0);
}

struct WorldParams {
  double gamma = 0.08;
  double delta = 0.05;
  DifficultyMixture difficulty;
  std::uint64_t seed = 1;
  std::optional<double> acc_small_retained_pct;
};

struct ScenarioCosts {
  Micros c_small = 0;
  Micros c_large = 0;
  double probe_fraction = 0.1;

  Micros c_probe() const { return static_cast<Micros>(std::llround(probe_fraction * c_small)); }

  CostParams analytic() const {
    return CostParams{static_cast<double>(c_small), static_cast<double>(c_large),
                      static_cast<double>(c_probe())};
  }
};

struct Scenario {
  std::string name;
  std::string kind = "monte_carlo";  // or "replay"
  std::string note;
  std::int64_t n_calls = 100000;
  std::uint64_t seed = 1;
  MemoryMode memory_mode = MemoryMode::cold;
  bool preroute = false;
  ScenarioCosts costs;
  WorldParams world;
  ThresholdConfig thresholds;
  BandParams bands;
  BandCutoffs cutoffs;
  double risk_rate = 0.0;
  double theta_small = 0.55;
  double theta_large = 0.85;
  double acc_small_pct = 29.0;
  double acc_large_pct = 43.6;
  double warming_saturation = 10.0;
  TokenUsage trace_tokens{10000, 300};
  // replay kind only
  std::filesystem::path trace_path;
  std::filesystem::path rates_path;
};

struct SimReport {
  std::string name;
  std::string kind;
  std::int64_t n_calls = 0;
  std::int64_t escalations = 0;
  std::int64_t probes = 0;
  double alpha = 0.0;
  double effective_accuracy_pct = 0.0;  // Appendix-style weighted projection
  double measured_accuracy_pct = 0.0;   // sampled from the sigmoid world model
  double mean_cost_usd = 0.0;
  double savings = 0.0;
  double share_small = 0.0;
  double share_large = 0.0;
  double share_guardrail = 0.0;
  std::array<std::int64_t, 5> by_reason{};
  std::string note;

  nlohmann::json to_json() const {
    const bool has_accuracy = kind != "replay";  // replays carry no world model
    return {{"name", name},
            {"kind", kind},
            {"n_calls", n_calls},
            {"escalations", escalations},
            {"probes", probes},
            {"alpha", alpha},
            {"effective_accuracy_pct",
             has_accuracy ? nlohmann::json(effective_accuracy_pct) : nlohmann::json()},
            {"measured_accuracy_pct",
             has_accuracy ? nlohmann::json(measured_accuracy_pct) : nlohmann::json()},
            {"mean_cost_usd", mean_cost_usd},
            {"savings", savings},
            {"tier_shares",
             {{"small", share_small}, {"large", share_large}, {"large_guardrail", share_guardrail}}},
            {"reasons",
             {{"easy_preroute", by_reason[0]},
              {"confident_probe", by_reason[1]},
              {"low_confidence_escalation", by_reason[2]},
              {"hard_preroute", by_reason[3]},
              {"safety_override", by_reason[4]}}},
            {"note", note}};
  }
};

namespace detail {

struct CallOutcome {
  double d = 0.0;
  std::size_t component = 0;
  std::optional<double> confidence;
  Reason reason = Reason::confident_probe;
  bool to_large = false;
  bool guardrail = false;
  bool probed = false;
  bool correct = false;
  Micros cost = 0;
};

inline CallOutcome simulate_call(const Scenario& s, std::int64_t index, double warming_scale) {
  CallRng rng(s.seed, static_cast<std::uint64_t>(index));
  CallOutcome out;
  auto [d, comp] = s.world.difficulty.sample(rng);
  out.d = d;
  out.component = comp;
  const bool flagged = rng.bernoulli(s.risk_rate);

  if (flagged) {
    out.to_large = true;
    out.guardrail = true;
    out.reason = Reason::safety_override;
    out.cost = s.costs.c_large;
  } else {
    const DifficultyEstimate est = combine_difficulty(d, d, s.cutoffs);
    const Preroute pre = preroute(est, s.preroute);
    if (pre == Preroute::to_small_skip_probe) {
      out.reason = Reason::easy_preroute;
      out.cost = s.costs.c_small;
    } else if (pre == Preroute::to_large_skip_probe) {
      out.to_large = true;
      out.reason = Reason::hard_preroute;
      out.cost = s.costs.c_large;
    } else {
      out.probed = true;
      const double conf = generate_confidence(d, s.memory_mode, s.bands, rng, warming_scale);
      out.confidence = conf;
      const double tau = adaptive_threshold(d, s.thresholds);
      if (conf >= tau) {
        out.reason = Reason::confident_probe;
        out.cost = s.costs.c_small;
      } else {
        out.to_large = true;
        out.reason = Reason::low_confidence_escalation;
        out.cost = s.costs.c_probe() + s.costs.c_large;
      }
    }
  }
  const double theta = out.to_large ? s.theta_large : s.theta_small;
  out.correct = rng.uniform() < correctness_probability(d, theta, s.world.gamma);
  return out;
}

struct Totals {
  std::int64_t escalations = 0;
  std::int64_t probes = 0;
  std::int64_t correct = 0;
  std::int64_t guardrail = 0;
  Micros cost = 0;
  std::array<std::int64_t, 5> by_reason{};

  void add(const CallOutcome& c) {
    if (c.to_large) ++escalations;
    if (c.probed) ++probes;
    if (c.correct) ++correct;
    if (c.guardrail) ++guardrail;
    cost += c.cost;
    ++by_reason[static_cast<std::size_t>(c.reason)];
  }

  void merge(const Totals& o) {
    escalations += o.escalations;
    probes += o.probes;
    correct += o.correct;
    guardrail += o.guardrail;
    cost += o.cost;
    for (std::size_t i = 0; i < by_reason.size(); ++i) by_reason[i] += o.by_reason[i];
  }
};

inline void append_trace_row(std::string& buf, const Scenario& s, std::int64_t turn,
                             const CallOutcome& c) {
  nlohmann::json row = {{"turn", turn},
                        {"kind", s.world.difficulty.components[c.component].label},
                        {"difficulty", c.d},
                        {"tokens_in", s.trace_tokens.input},
                        {"tokens_out", s.trace_tokens.output},
                        {"tier", c.to_large ? 2 : 1},
                        {"reason", reason_name(c.reason)}};
  if (c.confidence) row["confidence"] = *c.confidence;
  buf += row.dump();
  buf += "\n";
}

}  // namespace detail

// Runs the full routing policy over a synthetic world. Deterministic for a
// fixed seed: per-call streams are counter-derived, all accumulators are
// integers, and trace rows concatenate in call order whatever the thread count.
inline SimReport run_scenario(const Scenario& s, int threads = 2,
                              std::string* trace_jsonl = nullptr, double warming_scale = 1.0) {
  if (s.n_calls < 1) fail(Errc::out_of_range, "n_calls must be >= 1");
  s.world.difficulty.validate();
  s.thresholds.validate();
  if (s.costs.c_small <= 0 || s.costs.c_large <= 0 || s.costs.c_small > s.costs.c_large)
    fail(Errc::bad_config, "scenario costs must satisfy 0 < c_small <= c_large");

  threads = std::max(1, threads);
  const std::int64_t n = s.n_calls;
  const std::int64_t chunk = (n + threads - 1) / threads;
  std::vector<detail::Totals> partial(static_cast<std::size_t>(threads));
  std::vector<std::string> trace_parts(static_cast<std::size_t>(threads));

  auto worker = [&](int t) {
    const std::int64_t lo = t * chunk;
    const std::int64_t hi = std::min(n, lo + chunk);
    for (std::int64_t i = lo; i < hi; ++i) {
      detail::CallOutcome c = detail::simulate_call(s, i, warming_scale);
      partial[static_cast<std::size_t>(t)].add(c);
      if (trace_jsonl) detail::append_trace_row(trace_parts[static_cast<std::size_t>(t)], s, i, c);
    }
  };

  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }

  detail::Totals totals;
  for (const auto& p : partial) totals.merge(p);
  if (trace_jsonl)
    for (const auto& part : trace_parts) *trace_jsonl += part;

  SimReport r;
  r.name = s.name;
  r.kind = s.kind;
  r.note = s.note;
  r.n_calls = n;
  r.escalations = totals.escalations;
  r.probes = totals.probes;
  r.alpha = static_cast<double>(totals.escalations) / static_cast<double>(n);
  const double acc_retained = s.world.acc_small_retained_pct.value_or(s.acc_small_pct);
  r.effective_accuracy_pct = effective_accuracy(r.alpha, acc_retained, s.acc_large_pct);
  r.measured_accuracy_pct = 100.0 * static_cast<double>(totals.correct) / static_cast<double>(n);
  r.mean_cost_usd = dollars(totals.cost) / static_cast<double>(n);
  const Micros baseline = s.costs.c_large * n;
  r.savings = 1.0 - static_cast<double>(totals.cost) / static_cast<double>(baseline);
  r.share_guardrail = static_cast<double>(totals.guardrail) / static_cast<double>(n);
  r.share_large =
      static_cast<double>(totals.escalations - totals.guardrail) / static_cast<double>(n);
  r.share_small = 1.0 - r.share_large - r.share_guardrail;
  r.by_reason = totals.by_reason;
  return r;
}

// --- OpenClaw-style replay -------------------------------------------------

struct ReplayRates {
  Micros small_input = 0, small_output = 0;
  Micros large_input = 0, large_output = 0;
  double probe_fraction = 0.1;
  double threshold = 0.85;
};

struct ReplayTurn {
  std::int64_t turn = 0;
  std::string kind;
  double confidence = 0.0;
  std::optional<double> difficulty;
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
};

inline std::vector<ReplayTurn> load_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::malformed_trace, "cannot open " + path.string());
  std::vector<ReplayTurn> turns;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      fail(Errc::malformed_trace, path.string() + ":" + std::to_string(line_no) + ": bad json");
    try {
      ReplayTurn t;
      t.turn = j.at("turn").get<std::int64_t>();
      t.kind = j.value("kind", std::string("turn"));
      t.confidence = j.at("confidence").get<double>();
      if (j.contains("difficulty")) t.difficulty = j["difficulty"].get<double>();
      t.tokens_in = j.at("tokens_in").get<std::int64_t>();
      t.tokens_out = j.at("tokens_out").get<std::int64_t>();
      turns.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::malformed_trace, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (turns.empty()) fail(Errc::malformed_trace, path.string() + ": no turns");
  return turns;
}

// Replays fixed confidences against a flat threshold, pricing each turn's
// token counts at the configured rates. Escalated turns pay the probe fraction
// of the small-model bill plus the full large-model generation.
inline SimReport run_openclaw_replay(const std::vector<ReplayTurn>& turns,
                                     const ReplayRates& rates, const std::string& name = "replay",
                                     const std::string& note = "") {
  if (turns.empty()) fail(Errc::malformed_trace, "empty trace");
  SimReport r;
  r.name = name;
  r.kind = "replay";
  r.note = note;
  r.n_calls = static_cast<std::int64_t>(turns.size());
  Micros cost = 0;
  Micros baseline = 0;
  for (const auto& t : turns) {
    const Micros small_bill =
        token_cost(t.tokens_in, rates.small_input) + token_cost(t.tokens_out, rates.small_output);
    const Micros large_bill =
        token_cost(t.tokens_in, rates.large_input) + token_cost(t.tokens_out, rates.large_output);
    baseline += large_bill;
    if (t.confidence >= rates.threshold) {
      cost += small_bill;
      ++r.by_reason[static_cast<std::size_t>(Reason::confident_probe)];
    } else {
      cost += static_cast<Micros>(std::llround(rates.probe_fraction * small_bill)) + large_bill;
      ++r.escalations;
      ++r.by_reason[static_cast<std::size_t>(Reason::low_confidence_escalation)];
    }
    ++r.probes;
  }
  r.alpha = static_cast<double>(r.escalations) / static_cast<double>(r.n_calls);
  r.mean_cost_usd = dollars(cost) / static_cast<double>(r.n_calls);
  r.savings = 1.0 - static_cast<double>(cost) / static_cast<double>(baseline);
  r.share_large = r.alpha;
  r.share_small = 1.0 - r.alpha;
  return r;
}

// --- Warming curve ----------------------------------------------------------

struct WarmingPoint {
  int interaction = 0;
  double escalation_rate = 0.0;
  double savings = 0.0;
};

// Memory benefit grows as log(1+n)/log(1+n_sat), saturating at n_sat. The
// output is a hypothetical projection and is labeled as such by callers.
inline std::vector<WarmingPoint> warming_curve(const Scenario& s, int interactions_per_app,
                                               int threads = 2) {
  if (interactions_per_app < 1) fail(Errc::out_of_range, "interactions must be >= 1");
  Scenario warming = s;
  warming.memory_mode = MemoryMode::warming;
  std::vector<WarmingPoint> series;
  for (int n = 0; n <= interactions_per_app; ++n) {
    const double scale =
        std::min(1.0, std::log1p(static_cast<double>(n)) / std::log1p(s.warming_saturation));
    SimReport rep = run_scenario(warming, threads, nullptr, scale);
    series.push_back({n, rep.alpha, rep.savings});
  }
  return series;
}

// --- Scenario / rates files ---------------------------------------------------

inline ReplayRates rates_from_json(const nlohmann::json& j) {
  ReplayRates r;
  try {
    r.small_input = micros_from_dollars(j.at("small").at("input_usd_per_mtok").get<double>());
    r.small_output = micros_from_dollars(j.at("small").at("output_usd_per_mtok").get<double>());
    r.large_input = micros_from_dollars(j.at("large").at("input_usd_per_mtok").get<double>());
    r.large_output = micros_from_dollars(j.at("large").at("output_usd_per_mtok").get<double>());
    r.probe_fraction = j.value("probe_fraction", 0.1);
    r.threshold = j.value("threshold", 0.85);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::bad_config, std::string("bad rates file: ") + e.what());
  }
  return r;
}

inline ReplayRates load_rates(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::bad_config, "cannot open rates file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::bad_config, path.string() + ": " + e.what());
  }
  return rates_from_json(j);
}

inline Scenario scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  Scenario s;
  try {
    s.name = j.value("name", std::string("scenario"));
    s.kind = j.value("kind", std::string("monte_carlo"));
    s.note = j.value("note", std::string());
    if (s.kind == "replay") {
      s.trace_path = base_dir / j.at("trace").get<std::string>();
      s.rates_path = base_dir / j.at("rates").get<std::string>();
      return s;
    }
    s.n_calls = j.value("n_calls", std::int64_t{100000});
    s.seed = j.value("seed", std::uint64_t{1});
    const std::string mode = j.value("memory_mode", std::string("cold"));
    s.memory_mode = mode == "warm"      ? MemoryMode::warm
                    : mode == "warming" ? MemoryMode::warming
                                        : MemoryMode::cold;
    s.preroute = j.value("preroute", false);
    if (j.contains("costs")) {
      const auto& c = j["costs"];
      s.costs.c_small = micros_from_dollars(c.at("c_small_usd").get<double>());
      s.costs.c_large = micros_from_dollars(c.at("c_large_usd").get<double>());
      s.costs.probe_fraction = c.value("probe_fraction", 0.1);
    }
    if (j.contains("world")) {
      const auto& w = j["world"];
      s.world.gamma = w.value("gamma", 0.08);
      s.world.delta = w.value("delta", 0.05);
      if (w.contains("acc_small_retained_pct") && !w["acc_small_retained_pct"].is_null())
        s.world.acc_small_retained_pct = w["acc_small_retained_pct"].get<double>();
      if (w.contains("difficulty_mixture")) {
        s.world.difficulty.components.clear();
        for (const auto& cj : w["difficulty_mixture"]) {
          MixtureComponent c;
          c.weight = cj.at("weight").get<double>();
          const std::string dist = cj.value("dist", std::string("uniform"));
          c.dist = dist == "beta" ? MixtureComponent::Dist::beta : MixtureComponent::Dist::uniform;
          c.a = cj.value("a", 1);
          c.b = cj.value("b", 1);
          c.lo = cj.value("lo", 0.0);
          c.hi = cj.value("hi", 1.0);
          c.label = cj.value("label", std::string("action"));
          s.world.difficulty.components.push_back(c);
        }
      }
    }
    if (s.world.difficulty.components.empty()) {
      // Default world: easy-skewed and hard-skewed halves.
      s.world.difficulty.components = {
          {0.5, MixtureComponent::Dist::beta, 2, 5, 0.0, 1.0, "easy_skew"},
          {0.5, MixtureComponent::Dist::beta, 5, 2, 0.0, 1.0, "hard_skew"}};
    }
    if (j.contains("thresholds")) {
      s.thresholds.tau_easy = j["thresholds"].value("tau_easy", 0.80);
      s.thresholds.tau_hard = j["thresholds"].value("tau_hard", 0.92);
    }
    if (j.contains("bands")) {
      const auto& b = j["bands"];
      auto pair = [&](const char* key, double& lo, double& hi) {
        if (b.contains(key)) {
          lo = b[key].at(0).get<double>();
          hi = b[key].at(1).get<double>();
        }
      };
      pair("high", s.bands.high_lo, s.bands.high_hi);
      pair("mid_cold", s.bands.mid_cold_lo, s.bands.mid_cold_hi);
      pair("low", s.bands.low_lo, s.bands.low_hi);
      pair("noise_band", s.bands.noise_lo, s.bands.noise_hi);
      if (b.contains("mid_warm") && !b["mid_warm"].is_null()) {
        s.bands.has_warm_band = true;
        s.bands.mid_warm_lo = b["mid_warm"].at(0).get<double>();
        s.bands.mid_warm_hi = b["mid_warm"].at(1).get<double>();
      } else if (b.contains("memory_shift")) {
        s.bands.has_warm_band = false;
      }
      s.bands.memory_shift = b.value("memory_shift", 0.13);
      s.bands.high_cutoff = b.value("high_cutoff", 0.4);
      s.bands.low_cutoff = b.value("low_cutoff", 0.7);
      s.bands.easy_noise_rate = b.value("easy_noise_rate", 0.0);
    }
    if (j.contains("cutoffs")) {
      s.cutoffs.easy = j["cutoffs"].value("easy", 0.3);
      s.cutoffs.hard = j["cutoffs"].value("hard", 0.7);
    }
    s.risk_rate = j.value("risk_rate", 0.0);
    if (j.contains("pool")) {
      const auto& p = j["pool"];
      s.theta_small = p.value("theta_small", 0.55);
      s.theta_large = p.value("theta_large", 0.85);
      s.acc_small_pct = p.value("acc_small_pct", 29.0);
      s.acc_large_pct = p.value("acc_large_pct", 43.6);
    }
    s.warming_saturation = j.value("warming_saturation", 10.0);
    if (j.contains("trace_tokens")) {
      s.trace_tokens.input = j["trace_tokens"].value("in", std::int64_t{10000});
      s.trace_tokens.output = j["trace_tokens"].value("out", std::int64_t{300});
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::bad_config, std::string("bad scenario: ") + e.what());
  }
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::bad_config, "cannot open scenario " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::bad_config, path.string() + ": " + e.what());
  }
  return scenario_from_json(j, path.parent_path());
}

}  // namespace avr::sim
