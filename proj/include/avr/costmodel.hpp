#pragma once

#include <array>
#include <cstdint>
#include <mutex>
#include <optional>

#include <json.hpp>

#include "avr/core.hpp"
#include "avr/errors.hpp"

namespace avr {

// Per-call cost constants for the analytical model. Units cancel in every
// formula, so callers may pass micro-dollars or plain ratios.
struct CostParams {
  double c_small = 0.0;
  double c_large = 0.0;
  double c_probe = 0.0;  // conventionally probe_fraction * c_small

  void validate() const {
    if (c_small <= 0.0 || c_large <= 0.0 || c_probe <= 0.0)
      fail(Errc::out_of_range, "cost params must be positive");
    if (c_small > c_large) fail(Errc::out_of_range, "c_small must not exceed c_large");
  }
};

// (1 - alpha) * c_S + alpha * (c_probe + c_L).
inline double expected_cost(double alpha, const CostParams& p) {
  p.validate();
  if (alpha < 0.0 || alpha > 1.0) fail(Errc::out_of_range, "alpha must lie in [0, 1]");
  return (1.0 - alpha) * p.c_small + alpha * (p.c_probe + p.c_large);
}

// Signed fraction saved relative to routing everything to the large model.
inline double savings(double alpha, const CostParams& p) {
  return 1.0 - expected_cost(alpha, p) / p.c_large;
}

// Weighted accuracy: retained calls score like the small model, escalated like
// the large one.
inline double effective_accuracy(double alpha, double acc_small, double acc_large) {
  if (alpha < 0.0 || alpha > 1.0) fail(Errc::out_of_range, "alpha must lie in [0, 1]");
  if (acc_small < 0.0 || acc_large < 0.0)
    fail(Errc::out_of_range, "accuracies must be non-negative");
  return (1.0 - alpha) * acc_small + alpha * acc_large;
}

struct TokenUsage {
  std::int64_t input = 0;
  std::int64_t output = 0;
};

struct LedgerReport {
  std::int64_t calls_total = 0;
  std::int64_t escalations = 0;
  std::int64_t probe_charges = 0;
  Micros cost_accumulated = 0;
  Micros baseline_accumulated = 0;
  double alpha = 0.0;
  double mean_cost_usd = 0.0;
  double savings_fraction = 0.0;  // signed; routing can cost more on pathological traces
  double share_small = 0.0;
  double share_large = 0.0;
  double share_guardrail = 0.0;
  std::array<std::int64_t, 5> by_reason{};

  nlohmann::json to_json() const {
    return {{"calls_total", calls_total},
            {"escalations", escalations},
            {"probe_charges", probe_charges},
            {"alpha", alpha},
            {"mean_cost_usd", mean_cost_usd},
            {"savings", savings_fraction},
            {"cost_usd", dollars(cost_accumulated)},
            {"baseline_usd", dollars(baseline_accumulated)},
            {"tier_shares",
             {{"small", share_small}, {"large", share_large}, {"large_guardrail", share_guardrail}}},
            {"reasons",
             {{"easy_preroute", by_reason[0]},
              {"confident_probe", by_reason[1]},
              {"low_confidence_escalation", by_reason[2]},
              {"hard_preroute", by_reason[3]},
              {"safety_override", by_reason[4]}}}};
  }
};

// Running escalation-rate, per-call cost, and savings-vs-baseline accounting.
// Updates are atomic read-modify-write under one mutex; report() sees a
// consistent snapshot.
class CostLedger {
 public:
  // Charges actual token counts at per-model prices. Escalated calls add the
  // probe's tokens at small-model prices on top of the winning generation.
  // The baseline accumulates the large-model cost for the same generation.
  Micros charge(const RoutingOutcome& outcome, const TokenUsage& generation,
                const std::optional<TokenUsage>& probe, const ModelPool& pool) {
    const ModelProfile* chosen = nullptr;
    for (const auto& m : pool.models())
      if (m.tier == outcome.tier_chosen) chosen = &m;
    if (!chosen) fail(Errc::unknown_model, "no model at tier " + std::to_string(outcome.tier_chosen));
    const ModelProfile& small = pool.smallest();
    const ModelProfile& large = pool.largest();

    Micros cost = token_cost(generation.input, chosen->input_price) +
                  token_cost(generation.output, chosen->output_price);
    if (probe) {
      cost += token_cost(probe->input, small.input_price) +
              token_cost(probe->output, small.output_price);
    }
    const Micros baseline = token_cost(generation.input, large.input_price) +
                            token_cost(generation.output, large.output_price);

    std::lock_guard lock(mu_);
    ++calls_total_;
    if (outcome.tier_chosen != small.tier) ++escalations_;
    if (outcome.probe_charged) ++probe_charges_;
    cost_accumulated_ += cost;
    baseline_accumulated_ += baseline;
    ++by_reason_[static_cast<std::size_t>(outcome.reason)];
    if (outcome.reason == Reason::safety_override)
      ++guardrail_calls_;
    else if (outcome.tier_chosen == small.tier)
      ++small_calls_;
    return cost;
  }

  LedgerReport report() const {
    std::lock_guard lock(mu_);
    if (calls_total_ == 0) fail(Errc::empty_ledger, "no calls recorded");
    LedgerReport r;
    r.calls_total = calls_total_;
    r.escalations = escalations_;
    r.probe_charges = probe_charges_;
    r.cost_accumulated = cost_accumulated_;
    r.baseline_accumulated = baseline_accumulated_;
    r.alpha = static_cast<double>(escalations_) / static_cast<double>(calls_total_);
    r.mean_cost_usd = dollars(cost_accumulated_) / static_cast<double>(calls_total_);
    r.savings_fraction =
        baseline_accumulated_ > 0
            ? 1.0 - static_cast<double>(cost_accumulated_) / static_cast<double>(baseline_accumulated_)
            : 0.0;
    r.share_small = static_cast<double>(small_calls_) / static_cast<double>(calls_total_);
    r.share_guardrail = static_cast<double>(guardrail_calls_) / static_cast<double>(calls_total_);
    r.share_large = 1.0 - r.share_small - r.share_guardrail;
    r.by_reason = by_reason_;
    return r;
  }

  std::int64_t calls_total() const {
    std::lock_guard lock(mu_);
    return calls_total_;
  }

 private:
  mutable std::mutex mu_;
  std::int64_t calls_total_ = 0;
  std::int64_t escalations_ = 0;
  std::int64_t probe_charges_ = 0;
  std::int64_t small_calls_ = 0;
  std::int64_t guardrail_calls_ = 0;
  Micros cost_accumulated_ = 0;
  Micros baseline_accumulated_ = 0;
  std::array<std::int64_t, 5> by_reason_{};
};

}  // namespace avr
