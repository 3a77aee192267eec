#pragma once

#include <algorithm>
#include <string>

#include "avr/embedding.hpp"
#include "avr/errors.hpp"
#include "avr/kb.hpp"

namespace avr {

enum class Band { easy, medium, hard };

inline const char* band_name(Band b) {
  switch (b) {
    case Band::easy: return "easy";
    case Band::medium: return "medium";
    case Band::hard: return "hard";
  }
  return "medium";
}

struct BandCutoffs {
  double easy = 0.3;  // band easy <=> d < easy
  double hard = 0.7;  // band hard <=> d > hard
};

struct DifficultyEstimate {
  double d_vis = 0.0;
  double d_sem = 0.0;
  double d = 0.0;  // max of both channels
  Band band = Band::medium;
};

// Interpolation bounds for the confidence threshold.
struct ThresholdConfig {
  double tau_easy = 0.80;
  double tau_hard = 0.92;

  void validate() const {
    if (!(0.0 < tau_easy && tau_easy <= tau_hard && tau_hard < 1.0))
      fail(Errc::bad_config, "thresholds must satisfy 0 < tau_easy <= tau_hard < 1");
  }
};

namespace detail {

inline double hard_similarity(const Embedding& query, const KnowledgeBase& kb,
                              const std::string& modality) {
  bool found = false;
  double best = -1.0;
  for (const auto& e : kb.entries) {
    if (e.label != "hard") continue;
    if (!modality.empty() && e.modality != modality) continue;
    found = true;
    best = std::max(best, cosine(query, e.embedding));
  }
  if (!found)
    fail(Errc::empty_hard_set, "no hard " + modality + " prototypes in " + kb.name);
  return std::clamp(best, 0.0, 1.0);  // difficulty cannot be negative
}

}  // namespace detail

// Nearest hard-prototype similarity over the visual channel.
inline double visual_difficulty(const Embedding& crop_emb, const KnowledgeBase& kb) {
  return detail::hard_similarity(crop_emb, kb, "visual");
}

// Nearest hard-prototype similarity over the textual channel.
inline double semantic_difficulty(const Embedding& desc_emb, const KnowledgeBase& kb) {
  return detail::hard_similarity(desc_emb, kb, "textual");
}

// Conservative combination: the harder channel wins.
inline DifficultyEstimate combine_difficulty(double d_vis, double d_sem,
                                             const BandCutoffs& cutoffs = {}) {
  if (d_vis < 0.0 || d_vis > 1.0 || d_sem < 0.0 || d_sem > 1.0)
    fail(Errc::out_of_range, "difficulty channels must lie in [0, 1]");
  DifficultyEstimate est;
  est.d_vis = d_vis;
  est.d_sem = d_sem;
  est.d = std::max(d_vis, d_sem);
  est.band = est.d < cutoffs.easy ? Band::easy : est.d > cutoffs.hard ? Band::hard : Band::medium;
  return est;
}

// tau_easy + (tau_hard - tau_easy) * d.
inline double adaptive_threshold(double d, const ThresholdConfig& cfg) {
  cfg.validate();
  if (d < 0.0 || d > 1.0) fail(Errc::out_of_range, "difficulty must lie in [0, 1]");
  return cfg.tau_easy + (cfg.tau_hard - cfg.tau_easy) * d;
}

enum class Preroute { to_small_skip_probe, probe, to_large_skip_probe };

// Easy actions skip the probe; known-hard ones go straight to the large model.
// With pre-routing disabled every call probes.
inline Preroute preroute(const DifficultyEstimate& est, bool enabled) {
  if (!enabled) return Preroute::probe;
  switch (est.band) {
    case Band::easy: return Preroute::to_small_skip_probe;
    case Band::hard: return Preroute::to_large_skip_probe;
    case Band::medium: return Preroute::probe;
  }
  return Preroute::probe;
}

}  // namespace avr
