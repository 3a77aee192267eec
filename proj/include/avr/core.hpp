#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "avr/errors.hpp"

namespace avr {

// Currency is exact decimal micro-dollars so ledger sums are reproducible.
using Micros = std::int64_t;
inline constexpr Micros kMicrosPerDollar = 1'000'000;

inline Micros micros_from_dollars(double usd) {
  return static_cast<Micros>(std::llround(usd * 1e6));
}

inline double dollars(Micros m) { return static_cast<double>(m) / 1e6; }

// Cost of `tokens` at `price` micro-dollars per million tokens, rounded to nearest.
inline Micros token_cost(std::int64_t tokens, Micros price_per_mtok) {
  if (tokens < 0) fail(Errc::out_of_range, "negative token count");
  const std::int64_t raw = tokens * price_per_mtok;
  return (raw + 500'000) / 1'000'000;
}

// 8-bit RGB raster, row-major, 3 bytes per pixel.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  bool valid() const {
    return width > 0 && height > 0 &&
           pixels.size() == static_cast<std::size_t>(width) * height * 3;
  }

  static Image solid(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    Image img;
    img.width = w;
    img.height = h;
    img.pixels.resize(static_cast<std::size_t>(w) * h * 3);
    for (std::size_t i = 0; i + 2 < img.pixels.size(); i += 3) {
      img.pixels[i] = r;
      img.pixels[i + 1] = g;
      img.pixels[i + 2] = b;
    }
    return img;
  }

  std::uint8_t* at(int x, int y) {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  const std::uint8_t* at(int x, int y) const {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }

  // Binary PPM (P6). The wire and fixture format for screenshots.
  std::string to_ppm() const {
    std::string out = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(pixels.data()), pixels.size());
    return out;
  }

  static Image from_ppm(const std::string& bytes) {
    std::size_t pos = 0;
    auto next_token = [&]() -> std::string {
      while (pos < bytes.size()) {
        char c = bytes[pos];
        if (c == '#') {
          while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
          ++pos;
        } else {
          break;
        }
      }
      std::size_t start = pos;
      while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
      return bytes.substr(start, pos - start);
    };
    if (next_token() != "P6") fail(Errc::unreadable_payload, "not a P6 ppm");
    Image img;
    try {
      img.width = std::stoi(next_token());
      img.height = std::stoi(next_token());
      int maxval = std::stoi(next_token());
      if (maxval != 255) fail(Errc::unreadable_payload, "ppm maxval must be 255");
    } catch (const std::invalid_argument&) {
      fail(Errc::unreadable_payload, "bad ppm header");
    }
    if (img.width <= 0 || img.height <= 0) fail(Errc::unreadable_payload, "bad ppm dimensions");
    ++pos;  // single whitespace after maxval
    const std::size_t need = static_cast<std::size_t>(img.width) * img.height * 3;
    if (bytes.size() - pos < need) fail(Errc::unreadable_payload, "truncated ppm payload");
    img.pixels.assign(bytes.begin() + pos, bytes.begin() + pos + need);
    return img;
  }
};

enum class ActionType { click, type_text, scroll };

inline const char* action_type_name(ActionType a) {
  switch (a) {
    case ActionType::click: return "click";
    case ActionType::type_text: return "type";
    case ActionType::scroll: return "scroll";
  }
  return "click";
}

inline ActionType action_type_from(const std::string& s) {
  if (s == "click") return ActionType::click;
  if (s == "type") return ActionType::type_text;
  if (s == "scroll") return ActionType::scroll;
  fail(Errc::bad_request, "unknown action type: " + s);
}

// One prior action. `success` is tri-state: unknown when the effect was not observed.
struct ActionRecord {
  std::string description;
  int x = 0;
  int y = 0;
  std::optional<bool> success;
  std::int64_t timestamp = 0;
};

// One CUA action request.
struct ToolCall {
  Image screenshot;
  std::vector<ActionRecord> history;  // oldest first
  ActionType action_type = ActionType::click;
  int x = 0;  // top-left origin, x rightward, y downward
  int y = 0;
  std::string description;
  std::string app_id;
  std::string session_id;
};

// One member of the VLM pool. Prices are micro-dollars per million tokens.
struct ModelProfile {
  std::string model_id;
  int tier = 0;  // 1 = cheapest
  double capability = 0.0;
  Micros input_price = 0;
  Micros output_price = 0;
  double probe_fraction = 0.1;  // fraction of a full generation a probe costs
  std::string endpoint;
  double grounding_accuracy = 0.0;  // informational, percent
  bool supports_logprobs = true;
};

class ModelPool {
 public:
  ModelPool() = default;
  explicit ModelPool(std::vector<ModelProfile> models) : models_(std::move(models)) {
    std::sort(models_.begin(), models_.end(),
              [](const ModelProfile& a, const ModelProfile& b) { return a.tier < b.tier; });
  }

  // Tiers unique and strictly ordered; capability and input_price non-decreasing.
  void validate() const {
    for (std::size_t i = 0; i + 1 < models_.size(); ++i) {
      const auto& lo = models_[i];
      const auto& hi = models_[i + 1];
      if (lo.tier >= hi.tier) fail(Errc::bad_config, "pool tiers must be unique and ordered");
      if (lo.capability > hi.capability)
        fail(Errc::bad_config, "pool capability must be non-decreasing with tier");
      if (lo.input_price > hi.input_price)
        fail(Errc::bad_config, "pool input price must be non-decreasing with tier");
    }
    for (const auto& m : models_) {
      if (m.probe_fraction <= 0.0 || m.probe_fraction > 1.0)
        fail(Errc::bad_config, "probe_fraction must be in (0, 1]");
    }
  }

  std::size_t size() const { return models_.size(); }
  const std::vector<ModelProfile>& models() const { return models_; }

  const ModelProfile& smallest() const {
    if (models_.empty()) fail(Errc::no_such_tier, "empty pool");
    return models_.front();
  }
  const ModelProfile& largest() const {
    if (models_.empty()) fail(Errc::no_such_tier, "empty pool");
    return models_.back();
  }
  const ModelProfile& by_tier(int tier) const {
    for (const auto& m : models_)
      if (m.tier == tier) return m;
    fail(Errc::no_such_tier, "no tier " + std::to_string(tier));
  }
  const ModelProfile* find_model(const std::string& model_id) const {
    for (const auto& m : models_)
      if (m.model_id == model_id) return &m;
    return nullptr;
  }

 private:
  std::vector<ModelProfile> models_;
};

enum class Reason {
  easy_preroute,
  confident_probe,
  low_confidence_escalation,
  hard_preroute,
  safety_override,
};

inline const char* reason_name(Reason r) {
  switch (r) {
    case Reason::easy_preroute: return "easy_preroute";
    case Reason::confident_probe: return "confident_probe";
    case Reason::low_confidence_escalation: return "low_confidence_escalation";
    case Reason::hard_preroute: return "hard_preroute";
    case Reason::safety_override: return "safety_override";
  }
  return "unknown";
}

// Full decision record for one routed call.
// probe_charged means a probe was billed in addition to the final generation.
struct RoutingOutcome {
  std::string outcome_id;
  std::string call_ref;
  double difficulty = 0.0;
  std::optional<double> confidence;  // absent when the probe was skipped
  double risk = 0.0;
  double threshold_used = 0.0;
  int tier_chosen = 0;
  Reason reason = Reason::confident_probe;
  bool probe_charged = false;
  Micros cost = 0;
  std::string response_text;
  bool guardrail_verification = false;
};

inline void validate_outcome(const RoutingOutcome& o, const ModelPool& pool) {
  if (o.reason == Reason::safety_override && o.tier_chosen != pool.largest().tier)
    fail(Errc::out_of_range, "safety_override must route to the highest tier");
  if (o.reason == Reason::confident_probe) {
    if (!o.confidence.has_value() || *o.confidence < o.threshold_used)
      fail(Errc::out_of_range, "confident_probe requires confidence >= threshold");
  }
  if (o.reason == Reason::low_confidence_escalation && !o.probe_charged)
    fail(Errc::out_of_range, "low_confidence_escalation requires probe_charged");
}

// Checks every ToolCall invariant against the attached screenshot and pool.
inline const ToolCall& validate_tool_call(const ToolCall& call, const ModelPool& pool) {
  if (pool.size() < 2) fail(Errc::pool_too_small, "routing requires K >= 2 models");
  if (call.description.empty()) fail(Errc::empty_description, "action description is empty");
  if (!call.screenshot.valid()) fail(Errc::bad_request, "screenshot raster is invalid");
  if (call.x < 0 || call.x >= call.screenshot.width || call.y < 0 ||
      call.y >= call.screenshot.height) {
    std::ostringstream msg;
    msg << "coords (" << call.x << "," << call.y << ") outside " << call.screenshot.width << "x"
        << call.screenshot.height << " screenshot";
    fail(Errc::out_of_bounds, msg.str());
  }
  for (std::size_t i = 0; i + 1 < call.history.size(); ++i) {
    if (call.history[i].timestamp >= call.history[i + 1].timestamp)
      fail(Errc::bad_request, "history timestamps must strictly increase");
  }
  return call;
}

}  // namespace avr
