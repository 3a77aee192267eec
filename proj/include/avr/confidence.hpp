#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "avr/errors.hpp"

namespace avr {

// Output of a logprob-enabled probe. Natural-log probabilities, each <= 0.
struct ProbeResult {
  std::string output_text;
  std::vector<double> token_logprobs;

  static ProbeResult create(std::string output_text, std::vector<double> logprobs) {
    for (double lp : logprobs) {
      if (lp > 0.0 || std::isnan(lp))
        fail(Errc::probe_malformed, "token logprob must be <= 0");
    }
    ProbeResult p;
    p.output_text = std::move(output_text);
    p.token_logprobs = std::move(logprobs);
    return p;
  }

  std::size_t token_count() const { return token_logprobs.size(); }
};

struct ConfidenceScore {
  double mean_logprob = 0.0;
  double floor = -3.0;
  double value = 0.0;  // clamp((mean + |floor|) / |floor|, 0, 1)
};

// Mean logprob mapped into [0, 1] against the normalization floor.
inline ConfidenceScore score_confidence(const ProbeResult& probe, double floor) {
  if (floor >= 0.0) fail(Errc::non_negative_floor, "normalization floor must be negative");
  if (probe.token_logprobs.empty()) fail(Errc::empty_probe, "probe produced no tokens");
  double sum = 0.0;
  for (double lp : probe.token_logprobs) sum += lp;
  ConfidenceScore score;
  score.mean_logprob = sum / static_cast<double>(probe.token_logprobs.size());
  score.floor = floor;
  score.value = std::clamp((score.mean_logprob - floor) / (-floor), 0.0, 1.0);
  return score;
}

enum class Decision { accept_small, escalate };

// Ties accept: conf >= threshold keeps the call on the small model.
inline Decision decide(const ConfidenceScore& conf, double threshold) {
  return conf.value >= threshold ? Decision::accept_small : Decision::escalate;
}

// Weighted mean logprob. Ships disabled (uniform weights) in the routing path;
// the seam exists so selective token weighting can be tested in isolation.
inline double aggregate_weighted(const ProbeResult& probe, const std::vector<double>& weights) {
  if (weights.size() != probe.token_logprobs.size())
    fail(Errc::weight_shape_mismatch, "weights must match token count");
  double wsum = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) fail(Errc::degenerate_weights, "weights must be non-negative");
    wsum += weights[i];
    acc += weights[i] * probe.token_logprobs[i];
  }
  if (wsum <= 0.0) fail(Errc::degenerate_weights, "weights must not all be zero");
  return acc / wsum;
}

}  // namespace avr
