#pragma once

#include <functional>
#include <optional>

#include "avr/confidence.hpp"
#include "avr/core.hpp"
#include "avr/difficulty.hpp"
#include "avr/safety.hpp"

namespace avr {

struct RouteResult {
  int tier = 0;
  Reason reason = Reason::confident_probe;
  bool probe_charged = false;
  bool guardrail_verification = false;
  std::optional<double> confidence;  // absent when no probe was issued
};

// Full decision composition in pipeline order: safety check first, then
// difficulty pre-routing, then the confidence probe. Flagged or pre-routed
// calls never invoke `run_probe`, so they incur no probe cost.
// `run_probe` returns the normalized confidence; probe failures must be mapped
// to 0 by the caller (fail-closed escalation).
inline RouteResult decide_route(const DifficultyEstimate& diff, const RiskAssessment& risk,
                                double threshold, bool preroute_enabled, const ModelPool& pool,
                                const std::function<double()>& run_probe) {
  RouteResult result;
  if (risk.flagged) {
    result.tier = pool.largest().tier;
    result.reason = Reason::safety_override;
    result.probe_charged = false;
    result.guardrail_verification = true;
    return result;
  }
  switch (preroute(diff, preroute_enabled)) {
    case Preroute::to_small_skip_probe:
      result.tier = pool.smallest().tier;
      result.reason = Reason::easy_preroute;
      return result;
    case Preroute::to_large_skip_probe:
      result.tier = pool.largest().tier;
      result.reason = Reason::hard_preroute;
      return result;
    case Preroute::probe:
      break;
  }
  const double conf = run_probe();
  result.confidence = conf;
  if (conf >= threshold) {
    result.tier = pool.smallest().tier;
    result.reason = Reason::confident_probe;
    result.probe_charged = false;  // the accepted probe is the generation
  } else {
    result.tier = pool.largest().tier;
    result.reason = Reason::low_confidence_escalation;
    result.probe_charged = true;
  }
  return result;
}

}  // namespace avr
