#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "avr/embedding.hpp"
#include "avr/errors.hpp"
#include "avr/kb.hpp"

namespace avr {

// One manifest row: a text payload or a path to a PPM image, with its label.
struct LabeledExample {
  std::string modality;  // "visual" | "textual"
  std::string label;     // easy/hard or safe/dangerous
  std::string text;      // textual payload
  std::filesystem::path image;  // visual payload
  std::string note;
};

enum class KbKind { difficulty, safety };

inline std::vector<LabeledExample> load_examples(const std::filesystem::path& manifest) {
  std::ifstream in(manifest, std::ios::binary);
  if (!in) fail(Errc::unreadable_payload, "cannot open manifest " + manifest.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::unreadable_payload, manifest.string() + ": " + e.what());
  }
  if (!j.is_array()) fail(Errc::unreadable_payload, "manifest must be a json array");
  std::vector<LabeledExample> out;
  const std::filesystem::path base = manifest.parent_path();
  for (const auto& rec : j) {
    LabeledExample ex;
    ex.modality = rec.value("modality", "textual");
    ex.label = rec.at("label").get<std::string>();
    ex.note = rec.value("note", std::string());
    if (rec.contains("text")) ex.text = rec["text"].get<std::string>();
    if (rec.contains("image")) ex.image = base / rec["image"].get<std::string>();
    out.push_back(std::move(ex));
  }
  return out;
}

inline Embedding embed_example(const LabeledExample& ex, Embedder& embedder) {
  if (ex.modality == "visual") {
    std::ifstream in(ex.image, std::ios::binary);
    if (!in) fail(Errc::unreadable_payload, "cannot open image " + ex.image.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Image img = Image::from_ppm(bytes);
    // Prototypes are crop embeddings; larger images contribute their center crop.
    Crop crop = extract_crop(img, img.width / 2, img.height / 2);
    return embedder.embed_image(crop);
  }
  if (ex.text.empty()) fail(Errc::unreadable_payload, "textual example without text");
  return embedder.embed_text(ex.text);
}

// Embeds every payload and assembles the KB. Deterministic with the stub
// embedder, so rebuilding from identical inputs is byte-identical.
inline KnowledgeBase build_kb(const std::vector<LabeledExample>& examples, Embedder& embedder,
                              KbKind kind) {
  const std::string hard_label = kind == KbKind::difficulty ? "hard" : "dangerous";
  KnowledgeBase kb;
  kb.name = kind == KbKind::difficulty ? "difficulty" : "safety";
  bool any_hard = false;
  for (const auto& ex : examples) {
    kb.entries.emplace_back(ex.label, ex.modality, ex.note, embed_example(ex, embedder));
    if (ex.label == hard_label) any_hard = true;
  }
  if (!any_hard)
    fail(Errc::missing_hard_examples, "need >= 1 " + hard_label + " example per queried modality");
  return kb;
}

// Narrow prototype spread cannot separate the difficulty bands; worth a warning
// at build time rather than silent medium-only routing later.
inline std::optional<double> prototype_spread(const KnowledgeBase& kb) {
  std::vector<const KbEntry*> hard;
  for (const auto& e : kb.entries)
    if (e.label == "hard" || e.label == "dangerous") hard.push_back(&e);
  if (hard.size() < 2) return std::nullopt;
  double lo = 1.0, hi = -1.0;
  for (std::size_t i = 0; i < hard.size(); ++i)
    for (std::size_t k = i + 1; k < hard.size(); ++k) {
      const double c = cosine(hard[i]->embedding, hard[k]->embedding);
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
  return hi - lo;
}

struct RankedEntry {
  double similarity;
  std::string label;
  std::string modality;
  std::string note;
};

// Ranks KB entries against an embedded query; k larger than the KB returns all.
inline std::vector<RankedEntry> inspect_kb(const KnowledgeBase& kb, const Embedding& query,
                                           std::size_t k) {
  std::vector<RankedEntry> ranked;
  ranked.reserve(kb.entries.size());
  for (const auto& e : kb.entries)
    ranked.push_back({cosine(query, e.embedding), e.label, e.modality, e.note});
  std::sort(ranked.begin(), ranked.end(),
            [](const RankedEntry& a, const RankedEntry& b) { return a.similarity > b.similarity; });
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

}  // namespace avr
