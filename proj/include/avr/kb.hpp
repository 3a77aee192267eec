#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "avr/embedding.hpp"
#include "avr/errors.hpp"

namespace avr {

// One prototype. Difficulty KBs use labels easy/hard with a modality; safety
// KBs use safe/dangerous and may omit the modality.
struct KbEntry {
  std::string label;
  std::string modality;  // "visual", "textual", or empty
  std::string note;
  Embedding embedding;

  KbEntry(std::string label_, std::string modality_, std::string note_, Embedding emb)
      : label(std::move(label_)),
        modality(std::move(modality_)),
        note(std::move(note_)),
        embedding(std::move(emb)) {}
};

struct KnowledgeBase {
  std::string name;
  std::vector<KbEntry> entries;
};

inline nlohmann::json kb_to_json(const KnowledgeBase& kb) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : kb.entries) {
    nlohmann::json rec = {{"label", e.label}, {"note", e.note}, {"embedding", e.embedding.values()}};
    if (!e.modality.empty()) rec["modality"] = e.modality;
    arr.push_back(rec);
  }
  return arr;
}

inline KnowledgeBase kb_from_json(const nlohmann::json& j, const std::string& name) {
  if (!j.is_array() || j.empty()) fail(Errc::malformed_kb, name + ": expected a non-empty array");
  KnowledgeBase kb;
  kb.name = name;
  for (const auto& rec : j) {
    try {
      std::string label = rec.at("label").get<std::string>();
      std::string modality = rec.value("modality", std::string());
      std::string note = rec.value("note", std::string());
      auto values = rec.at("embedding").get<std::vector<double>>();
      SourceKind kind = modality == "visual" ? SourceKind::image : SourceKind::text;
      kb.entries.emplace_back(std::move(label), std::move(modality), std::move(note),
                              Embedding::from_raw(std::move(values), kind));
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::malformed_kb, name + ": " + e.what());
    }
  }
  return kb;
}

inline KnowledgeBase load_kb(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::malformed_kb, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::malformed_kb, path.string() + ": " + e.what());
  }
  return kb_from_json(j, path.filename().string());
}

inline void save_kb(const KnowledgeBase& kb, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::persistence_failure, "cannot write " + path.string());
  out << kb_to_json(kb).dump(2) << "\n";
  if (!out) fail(Errc::persistence_failure, "short write to " + path.string());
}

}  // namespace avr
