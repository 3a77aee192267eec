#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "avr/core.hpp"
#include "avr/embedding.hpp"
#include "avr/errors.hpp"

namespace avr {

enum class MemoryKind {
  element_location,
  navigation_path,
  application_state,
  successful_action,
  failed_action,
};

inline const char* memory_kind_name(MemoryKind k) {
  switch (k) {
    case MemoryKind::element_location: return "element_location";
    case MemoryKind::navigation_path: return "navigation_path";
    case MemoryKind::application_state: return "application_state";
    case MemoryKind::successful_action: return "successful_action";
    case MemoryKind::failed_action: return "failed_action";
  }
  return "application_state";
}

inline MemoryKind memory_kind_from(const std::string& s) {
  if (s == "element_location") return MemoryKind::element_location;
  if (s == "navigation_path") return MemoryKind::navigation_path;
  if (s == "application_state") return MemoryKind::application_state;
  if (s == "successful_action") return MemoryKind::successful_action;
  if (s == "failed_action") return MemoryKind::failed_action;
  fail(Errc::persistence_failure, "unknown memory kind: " + s);
}

struct MemoryEntry {
  std::string id;
  std::string app_id;
  MemoryKind kind = MemoryKind::application_state;
  std::string content;
  Embedding embedding;
  std::int64_t created_at = 0;
  std::string session_id;
};

struct RetrievalResult {
  std::vector<std::pair<MemoryEntry, double>> entries;  // similarity descending
  int k = 0;
};

namespace detail {

inline nlohmann::json memory_entry_to_json(const MemoryEntry& e) {
  return {{"id", e.id},
          {"app_id", e.app_id},
          {"kind", memory_kind_name(e.kind)},
          {"content", e.content},
          {"embedding", e.embedding.values()},
          {"created_at", e.created_at},
          {"session_id", e.session_id}};
}

inline MemoryEntry memory_entry_from_json(const nlohmann::json& j) {
  MemoryEntry e{
      j.at("id").get<std::string>(),
      j.at("app_id").get<std::string>(),
      memory_kind_from(j.at("kind").get<std::string>()),
      j.at("content").get<std::string>(),
      Embedding::from_raw(j.at("embedding").get<std::vector<double>>(), SourceKind::text),
      j.at("created_at").get<std::int64_t>(),
      j.at("session_id").get<std::string>()};
  if (e.content.empty()) fail(Errc::persistence_failure, "memory content is empty");
  return e;
}

}  // namespace detail

// Append-only per-application memory. Persistence is one JSON record per line;
// the in-memory index is rebuilt by full scan at startup. A truncated final
// line (crash mid-append) is tolerated and skipped.
class MemoryStore {
 public:
  MemoryStore() = default;  // in-memory only

  explicit MemoryStore(std::filesystem::path log_path) : path_(std::move(log_path)) {
    if (path_.has_parent_path()) {
      std::error_code ec;
      std::filesystem::create_directories(path_.parent_path(), ec);
    }
    std::ifstream in(path_, std::ios::binary);
    if (in) {
      std::string line;
      std::size_t line_no = 0;
      while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
          // Only the last line may be a torn write.
          if (in.peek() == EOF) break;
          fail(Errc::persistence_failure,
               path_.string() + ":" + std::to_string(line_no) + ": malformed record");
        }
        insert_locked(detail::memory_entry_from_json(j));
      }
    }
    log_.open(path_, std::ios::binary | std::ios::app);
    if (!log_) fail(Errc::persistence_failure, "cannot open " + path_.string());
  }

  // Durably appends one entry. Duplicate ids are rejected, never overwritten.
  void append(const MemoryEntry& entry) {
    if (entry.content.empty()) fail(Errc::persistence_failure, "memory content is empty");
    std::unique_lock lock(mu_);
    if (ids_.count(entry.id)) fail(Errc::duplicate_id, "memory id exists: " + entry.id);
    if (log_.is_open()) {
      log_ << detail::memory_entry_to_json(entry).dump() << "\n";
      log_.flush();
      if (!log_) fail(Errc::persistence_failure, "write failed: " + path_.string());
    }
    insert_locked(entry);
  }

  // Top-k entries for the app by cosine similarity; ties break by ascending id.
  RetrievalResult retrieve(const std::string& app_id, const Embedding& query, int k) const {
    if (k < 1) fail(Errc::out_of_range, "k must be >= 1");
    std::shared_lock lock(mu_);
    RetrievalResult result;
    result.k = k;
    auto it = by_app_.find(app_id);
    if (it == by_app_.end()) return result;
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(it->second.size());
    for (std::size_t idx : it->second) scored.emplace_back(cosine(query, entries_[idx].embedding), idx);
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return entries_[a.second].id < entries_[b.second].id;
    });
    const std::size_t take = std::min<std::size_t>(k, scored.size());
    for (std::size_t i = 0; i < take; ++i)
      result.entries.emplace_back(entries_[scored[i].second], scored[i].first);
    return result;
  }

  std::size_t size() const {
    std::shared_lock lock(mu_);
    return entries_.size();
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  void insert_locked(MemoryEntry entry) {
    ids_.insert(entry.id);
    by_app_[entry.app_id].push_back(entries_.size());
    entries_.push_back(std::move(entry));
  }

  std::filesystem::path path_;
  mutable std::shared_mutex mu_;
  std::vector<MemoryEntry> entries_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_app_;
  std::unordered_set<std::string> ids_;
  std::ofstream log_;
};

// 4 characters ~ 1 token; tokenizer-free and recorded as approximate.
inline int approx_tokens(std::string_view text) {
  return static_cast<int>((text.size() + 3) / 4);
}

inline constexpr const char* kMemoryBlockHeader =
    "Relevant memories from prior interactions with this application:";

// Renders the delimited memory section, highest similarity first, keeping whole
// entries within the token budget. Empty result when nothing fits or no memories.
inline std::string render_memory_block(const RetrievalResult& memories, int token_budget) {
  if (token_budget <= 0) fail(Errc::out_of_range, "token budget must be positive");
  std::string block;
  int used = 0;
  for (const auto& [entry, sim] : memories.entries) {
    (void)sim;
    const int need = approx_tokens(entry.content);
    if (used + need > token_budget) break;  // whole entries only, never split
    used += need;
    block += "- " + entry.content + "\n";
  }
  if (block.empty()) return {};
  return std::string(kMemoryBlockHeader) + "\n" + block;
}

// Canonical probe prompt. With no memories the output is byte-identical to the
// cold prompt; the history is always preserved.
struct AugmentedPrompt {
  nlohmann::json messages = nlohmann::json::array();
  std::string to_json() const { return messages.dump(); }
};

inline AugmentedPrompt inject(const ToolCall& call, const RetrievalResult& memories,
                              int token_budget) {
  AugmentedPrompt prompt;
  const std::string block = render_memory_block(memories, token_budget);
  if (!block.empty()) prompt.messages.push_back({{"role", "system"}, {"content", block}});
  for (const auto& rec : call.history) {
    std::string result = !rec.success.has_value() ? "unknown" : (*rec.success ? "ok" : "failed");
    prompt.messages.push_back(
        {{"role", "assistant"},
         {"content", rec.description + " -> (" + std::to_string(rec.x) + "," +
                         std::to_string(rec.y) + ") [" + result + "]"}});
  }
  prompt.messages.push_back(
      {{"role", "user"},
       {"content", std::string(action_type_name(call.action_type)) + ": " + call.description}});
  return prompt;
}

struct FeedbackRecord {
  bool success = false;
  std::optional<std::pair<int, int>> corrected_coords;
};

// Builds the successful_action / failed_action entry written when the
// orchestrator reports a result. Failed actions carry both coordinate pairs.
inline MemoryEntry make_feedback_entry(const std::string& outcome_id, const std::string& app_id,
                                       const std::string& session_id,
                                       const std::string& description, int x, int y,
                                       const Embedding& desc_embedding, const FeedbackRecord& fb,
                                       std::int64_t created_at) {
  MemoryEntry entry{
      "fb:" + outcome_id,
      app_id,
      fb.success ? MemoryKind::successful_action : MemoryKind::failed_action,
      {},
      desc_embedding,
      created_at,
      session_id};
  std::string coords = "(" + std::to_string(x) + ", " + std::to_string(y) + ")";
  if (fb.success) {
    entry.content = "Action at " + coords + " succeeded: " + description;
  } else {
    entry.content = "Action at " + coords + " failed: " + description;
    if (fb.corrected_coords) {
      entry.content += "; the correct target was (" + std::to_string(fb.corrected_coords->first) +
                       ", " + std::to_string(fb.corrected_coords->second) + ")";
    }
  }
  return entry;
}

// Returns false (store unchanged) when the same feedback was already recorded.
inline bool record_outcome(MemoryStore& store, const RoutingOutcome& outcome, const ToolCall& call,
                           const Embedding& desc_embedding, const FeedbackRecord& fb,
                           std::int64_t created_at) {
  MemoryEntry entry = make_feedback_entry(outcome.outcome_id, call.app_id, call.session_id,
                                          call.description, call.x, call.y, desc_embedding, fb,
                                          created_at);
  try {
    store.append(entry);
  } catch (const Error& e) {
    if (e.code() == Errc::duplicate_id) return false;
    throw;
  }
  return true;
}

}  // namespace avr
