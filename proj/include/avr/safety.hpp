#pragma once

#include <algorithm>

#include "avr/core.hpp"
#include "avr/embedding.hpp"
#include "avr/errors.hpp"
#include "avr/kb.hpp"

namespace avr {

struct RiskAssessment {
  double risk = 0.0;
  double tau_risk = 0.8;
  bool flagged = false;  // risk > tau_risk, strictly
};

// Nearest dangerous-prototype similarity over both modalities. Reuses the
// embeddings computed once per call; no extra embedder invocations.
inline RiskAssessment assess_risk(const Embedding& crop_emb, const Embedding& desc_emb,
                                  const KnowledgeBase& kb, double tau_risk) {
  if (tau_risk <= 0.0 || tau_risk >= 1.0)
    fail(Errc::out_of_range, "tau_risk must lie in (0, 1)");
  bool found = false;
  double best = -1.0;
  for (const auto& e : kb.entries) {
    if (e.label != "dangerous") continue;
    found = true;
    best = std::max(best, std::max(cosine(crop_emb, e.embedding), cosine(desc_emb, e.embedding)));
  }
  if (!found) fail(Errc::empty_dangerous_set, "no dangerous prototypes in " + kb.name);
  RiskAssessment out;
  out.risk = std::clamp(best, 0.0, 1.0);
  out.tau_risk = tau_risk;
  out.flagged = out.risk > tau_risk;
  return out;
}

struct RouteDecision {
  int tier = 0;
  Reason reason = Reason::confident_probe;
  bool probe_charged = false;
  bool guardrail_verification = false;
};

// Flagged calls pin to the largest model with guardrail verification required,
// regardless of what the cost-optimal path chose.
inline RouteDecision apply_safety_override(const RiskAssessment& assessment, RouteDecision base,
                                           const ModelPool& pool) {
  if (!assessment.flagged) return base;
  base.tier = pool.largest().tier;
  base.reason = Reason::safety_override;
  base.probe_charged = false;
  base.guardrail_verification = true;
  return base;
}

}  // namespace avr
