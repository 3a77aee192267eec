#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "avr/pipeline.hpp"
#include "avr/safety.hpp"

using namespace avr;

namespace {

KnowledgeBase safety_kb() {
  KnowledgeBase kb;
  kb.name = "safety";
  kb.entries.emplace_back("dangerous", "", "Delete All", Embedding::unit_axis(0, SourceKind::text));
  kb.entries.emplace_back("dangerous", "", "phishing dialog", Embedding::unit_axis(1, SourceKind::image));
  kb.entries.emplace_back("safe", "", "Save", Embedding::unit_axis(2, SourceKind::text));
  return kb;
}

ModelPool pool() {
  ModelProfile s;
  s.model_id = "small";
  s.tier = 1;
  s.capability = 0.5;
  ModelProfile l;
  l.model_id = "large";
  l.tier = 2;
  l.capability = 0.9;
  return ModelPool({s, l});
}

Embedding axis(int i, SourceKind k = SourceKind::text) { return Embedding::unit_axis(i, k); }

}  // namespace

TEST_CASE("a description matching a dangerous prototype is flagged at risk 1") {
  auto kb = safety_kb();
  auto r = assess_risk(axis(5, SourceKind::image), axis(0), kb, 0.8);
  CHECK(r.risk == 1.0);
  CHECK(r.flagged);
}

TEST_CASE("embeddings orthogonal to every dangerous prototype score zero") {
  auto kb = safety_kb();
  auto r = assess_risk(axis(6, SourceKind::image), axis(7), kb, 0.8);
  CHECK(r.risk == 0.0);
  CHECK_FALSE(r.flagged);
}

TEST_CASE("risk exactly at the threshold is not flagged: strict inequality") {
  auto kb = safety_kb();
  std::vector<double> v(kEmbeddingDim, 0.0);
  v[0] = 0.8;
  v[5] = std::sqrt(1.0 - 0.64);
  auto desc = Embedding::from_raw(std::move(v), SourceKind::text);
  auto r = assess_risk(axis(6, SourceKind::image), desc, kb, 0.8);
  CHECK(r.risk == doctest::Approx(0.8).epsilon(1e-12));
  CHECK_FALSE(r.flagged);
}

TEST_CASE("the visual channel can flag on its own") {
  auto kb = safety_kb();
  auto r = assess_risk(axis(1, SourceKind::image), axis(9), kb, 0.8);
  CHECK(r.risk == 1.0);
  CHECK(r.flagged);
}

TEST_CASE("safe-labeled entries never contribute to risk") {
  auto kb = safety_kb();
  auto r = assess_risk(axis(6, SourceKind::image), axis(2), kb, 0.8);
  CHECK(r.risk == 0.0);
}

TEST_CASE("a KB without dangerous entries cannot assess") {
  KnowledgeBase kb;
  kb.name = "safe-only";
  kb.entries.emplace_back("safe", "", "Save", axis(0));
  try {
    assess_risk(axis(1, SourceKind::image), axis(2), kb, 0.8);
    FAIL("expected EmptyDangerousSet");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::empty_dangerous_set);
  }
}

TEST_CASE("tau_risk outside (0,1) is rejected") {
  auto kb = safety_kb();
  CHECK_THROWS_AS(assess_risk(axis(1, SourceKind::image), axis(2), kb, 0.0), Error);
  CHECK_THROWS_AS(assess_risk(axis(1, SourceKind::image), axis(2), kb, 1.0), Error);
}

TEST_CASE("override pins flagged calls to the largest tier") {
  auto p = pool();
  RiskAssessment flagged{0.95, 0.8, true};
  RouteDecision base{1, Reason::confident_probe, false, false};
  auto out = apply_safety_override(flagged, base, p);
  CHECK(out.tier == 2);
  CHECK(out.reason == Reason::safety_override);
  CHECK(out.guardrail_verification);

  RiskAssessment clean{0.1, 0.8, false};
  auto kept = apply_safety_override(clean, base, p);
  CHECK(kept.tier == 1);
  CHECK(kept.reason == Reason::confident_probe);
  CHECK_FALSE(kept.guardrail_verification);

  // Already-large decisions still gain the guardrail flag and override reason.
  RouteDecision big{2, Reason::low_confidence_escalation, true, false};
  auto forced = apply_safety_override(flagged, big, p);
  CHECK(forced.tier == 2);
  CHECK(forced.reason == Reason::safety_override);
  CHECK(forced.guardrail_verification);
}

TEST_CASE("override dominance over the whole decision grid") {
  auto p = pool();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int flagged_count = 0;
  for (int i = 0; i < 10000; ++i) {
    const double d = unit(rng);
    const double conf = unit(rng);
    const double risk_value = unit(rng);
    const bool preroute_enabled = (i % 2) == 0;
    DifficultyEstimate est = combine_difficulty(d, 0.0);
    RiskAssessment risk{risk_value, 0.8, risk_value > 0.8};
    const double tau = adaptive_threshold(d, ThresholdConfig{});
    bool probed = false;
    RouteResult route = decide_route(est, risk, tau, preroute_enabled, p, [&] {
      probed = true;
      return conf;
    });
    if (risk.flagged) {
      ++flagged_count;
      CHECK(route.tier == 2);
      CHECK(route.reason == Reason::safety_override);
      CHECK_FALSE(route.probe_charged);
      CHECK_FALSE(probed);  // flagged calls are never probed
      CHECK(route.guardrail_verification);
    }
  }
  CHECK(flagged_count > 1500);  // the property actually exercised the branch
}

TEST_CASE("pipeline order: preroute-resolved calls are never probed") {
  auto p = pool();
  RiskAssessment clean{0.0, 0.8, false};
  bool probed = false;
  auto easy = decide_route(combine_difficulty(0.1, 0.0), clean, 0.82, true, p, [&] {
    probed = true;
    return 0.5;
  });
  CHECK(easy.reason == Reason::easy_preroute);
  CHECK_FALSE(probed);
  auto hard = decide_route(combine_difficulty(0.9, 0.0), clean, 0.91, true, p, [&] {
    probed = true;
    return 0.5;
  });
  CHECK(hard.reason == Reason::hard_preroute);
  CHECK_FALSE(probed);
}

TEST_CASE("pipeline probe path accepts and escalates on the threshold") {
  auto p = pool();
  RiskAssessment clean{0.0, 0.8, false};
  auto accepted = decide_route(combine_difficulty(0.5, 0.0), clean, 0.86, true, p, [] { return 0.96; });
  CHECK(accepted.tier == 1);
  CHECK(accepted.reason == Reason::confident_probe);
  CHECK(accepted.confidence == 0.96);
  CHECK_FALSE(accepted.probe_charged);

  auto escalated = decide_route(combine_difficulty(0.5, 0.0), clean, 0.86, true, p, [] { return 0.80; });
  CHECK(escalated.tier == 2);
  CHECK(escalated.reason == Reason::low_confidence_escalation);
  CHECK(escalated.probe_charged);
}
