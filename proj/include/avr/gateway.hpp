#pragma once

#include <atomic>
#include <chrono>
#include <deque>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "avr/backend.hpp"
#include "avr/config.hpp"
#include "avr/confidence.hpp"
#include "avr/core.hpp"
#include "avr/costmodel.hpp"
#include "avr/difficulty.hpp"
#include "avr/errors.hpp"
#include "avr/kb.hpp"
#include "avr/memory.hpp"
#include "avr/pipeline.hpp"
#include "avr/remote_embedder.hpp"
#include "avr/safety.hpp"

namespace avr {

namespace detail {

inline int http_status_for(Errc code) {
  switch (code) {
    case Errc::bad_request:
    case Errc::out_of_bounds:
    case Errc::empty_description:
    case Errc::unreadable_payload:
    case Errc::empty_text:
    case Errc::screenshot_too_small:
    case Errc::out_of_range:
      return 400;
    case Errc::unknown_outcome:
      return 404;
    case Errc::backend_unavailable:
      return 502;
    default:
      return 500;
  }
}

struct ParsedCompletionRequest {
  nlohmann::json body;
  std::string description;
  Image screenshot;
  int x = 0;
  int y = 0;
  ActionType action_type = ActionType::click;
  std::string app_id;
  std::string session_id;
};

// Accepts the OpenAI chat-completions subset: the last user message must carry
// one text part (the action description) and one image part whose data URL
// holds a base64 binary PPM screenshot. Target coordinates ride in the
// X-AVR-Target-XY header or the "avr". namespaced body field.
inline ParsedCompletionRequest parse_completion_request(const httplib::Request& req) {
  ParsedCompletionRequest out;
  out.body = nlohmann::json::parse(req.body, nullptr, false);
  if (out.body.is_discarded()) fail(Errc::bad_request, "body is not valid json");
  if (!out.body.contains("messages") || !out.body["messages"].is_array() ||
      out.body["messages"].empty())
    fail(Errc::bad_request, "request needs a non-empty messages array");

  const nlohmann::json* last_user = nullptr;
  for (const auto& m : out.body["messages"])
    if (m.value("role", "") == "user") last_user = &m;
  if (!last_user) fail(Errc::bad_request, "no user message present");

  std::string image_b64;
  const auto& content = (*last_user)["content"];
  if (content.is_string()) {
    out.description = content.get<std::string>();
  } else if (content.is_array()) {
    for (const auto& part : content) {
      const std::string type = part.value("type", "");
      if (type == "text") {
        if (!out.description.empty()) out.description += " ";
        out.description += part.value("text", "");
      } else if (type == "image_url") {
        std::string url = part.at("image_url").value("url", "");
        const auto comma = url.find(',');
        if (url.rfind("data:", 0) != 0 || comma == std::string::npos)
          fail(Errc::bad_request, "image_url must be a base64 data url");
        image_b64 = url.substr(comma + 1);
      }
    }
  }
  if (image_b64.empty()) fail(Errc::bad_request, "request needs >= 1 image part");
  if (out.description.empty()) fail(Errc::empty_description, "request needs an action description");
  out.screenshot = Image::from_ppm(base64_decode(image_b64));

  out.session_id = req.get_header_value("X-AVR-Session");
  out.app_id = req.get_header_value("X-AVR-App");
  if (out.session_id.empty() || out.app_id.empty())
    fail(Errc::bad_request, "X-AVR-Session and X-AVR-App headers are required");

  std::string xy = req.get_header_value("X-AVR-Target-XY");
  if (xy.empty() && out.body.contains("avr") && out.body["avr"].contains("target_xy")) {
    const auto& t = out.body["avr"]["target_xy"];
    out.x = t.at(0).get<int>();
    out.y = t.at(1).get<int>();
  } else {
    const auto comma = xy.find(',');
    if (comma == std::string::npos)
      fail(Errc::bad_request, "target coordinates required (X-AVR-Target-XY or avr.target_xy)");
    try {
      out.x = std::stoi(xy.substr(0, comma));
      out.y = std::stoi(xy.substr(comma + 1));
    } catch (const std::exception&) {
      fail(Errc::bad_request, "X-AVR-Target-XY must be \"x,y\"");
    }
  }
  if (out.body.contains("avr") && out.body["avr"].contains("action_type"))
    out.action_type = action_type_from(out.body["avr"]["action_type"].get<std::string>());
  return out;
}

}  // namespace detail

// The routing proxy. Each request flows safety check -> difficulty -> probe ->
// decision -> backend, with exactly one image embed and one text embed per
// call, shared by every stage.
class Gateway {
 public:
  explicit Gateway(GatewayConfig cfg, std::unique_ptr<Embedder> embedder = nullptr)
      : cfg_(std::move(cfg)),
        embedder_(embedder ? std::move(embedder) : make_embedder(cfg_.embedder)),
        difficulty_kb_(load_kb(cfg_.difficulty_kb_path)),
        safety_kb_(load_kb(cfg_.safety_kb_path)),
        memory_(cfg_.memory.path) {
    cfg_.validate();
    server_.set_tcp_nodelay(true);
    server_.new_task_queue = [this] {
      return new httplib::ThreadPool(static_cast<std::size_t>(cfg_.max_concurrent_requests));
    };
    wire_routes();
  }

  // Binds the configured address; port 0 picks an ephemeral port.
  void bind() {
    auto colon = cfg_.listen.rfind(':');
    if (colon == std::string::npos) fail(Errc::bad_config, "listen must be host:port");
    host_ = cfg_.listen.substr(0, colon);
    int port = std::stoi(cfg_.listen.substr(colon + 1));
    if (port == 0) {
      port_ = server_.bind_to_any_port(host_);
    } else {
      if (!server_.bind_to_port(host_, port))
        fail(Errc::bad_config, "cannot bind " + cfg_.listen);
      port_ = port;
    }
  }

  int port() const { return port_; }

  void run() { server_.listen_after_bind(); }

  std::thread start() {
    bind();
    std::thread t([this] { run(); });
    server_.wait_until_ready();
    return t;
  }

  void stop() { server_.stop(); }

  CostLedger& ledger() { return ledger_; }
  MemoryStore& memory() { return memory_; }
  const GatewayConfig& config() const { return cfg_; }

 private:
  struct PendingOutcome {
    std::string app_id;
    std::string session_id;
    std::string description;
    int x = 0;
    int y = 0;
    std::optional<Embedding> desc_embedding;
  };

  void wire_routes() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      handle_completion(req, res);
    });
    server_.Post("/v1/feedback", [this](const httplib::Request& req, httplib::Response& res) {
      handle_feedback(req, res);
    });
    server_.Get("/v1/metrics", [this](const httplib::Request&, httplib::Response& res) {
      handle_metrics(res);
    });
    server_.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"status":"ok"})", "application/json");
    });
  }

  static void send_error(httplib::Response& res, Errc code, const std::string& what,
                         const nlohmann::json& trace = nlohmann::json::object()) {
    res.status = detail::http_status_for(code);
    nlohmann::json body = {{"error", {{"code", errc_name(code)}, {"message", what}}}};
    if (!trace.empty()) body["avr"] = trace;
    res.set_content(body.dump(), "application/json");
  }

  BackendClient client_for(const ModelProfile& m) const {
    return BackendClient(m.endpoint, m.model_id, cfg_.backend.timeout_ms, m.supports_logprobs);
  }

  std::string memory_block_for(const std::string& app_id, const Embedding& desc_emb) {
    RetrievalResult memories = memory_.retrieve(app_id, desc_emb, cfg_.memory.k);
    return render_memory_block(memories, cfg_.memory.token_budget);
  }

  void handle_completion(const httplib::Request& req, httplib::Response& res) {
    detail::ParsedCompletionRequest parsed;
    try {
      parsed = detail::parse_completion_request(req);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
      return;
    } catch (const std::exception& e) {
      send_error(res, Errc::bad_request, e.what());
      return;
    }

    try {
      ToolCall call;
      call.screenshot = std::move(parsed.screenshot);
      call.action_type = parsed.action_type;
      call.x = parsed.x;
      call.y = parsed.y;
      call.description = parsed.description;
      call.app_id = parsed.app_id;
      call.session_id = parsed.session_id;
      validate_tool_call(call, cfg_.pool);

      // One embed pair per call; every later stage reuses these.
      const Crop crop = extract_crop(call.screenshot, call.x, call.y);
      const Embedding crop_emb = embedder_->embed_image(crop);
      const Embedding desc_emb = embedder_->embed_text(call.description);

      const RiskAssessment risk = assess_risk(crop_emb, desc_emb, safety_kb_, cfg_.tau_risk);
      const double d_vis = visual_difficulty(crop_emb, difficulty_kb_);
      const double d_sem = semantic_difficulty(desc_emb, difficulty_kb_);
      const DifficultyEstimate est = combine_difficulty(d_vis, d_sem, cfg_.cutoffs);
      const double threshold = adaptive_threshold(est.d, cfg_.thresholds);

      std::optional<BackendResponse> probe_response;
      std::optional<TokenUsage> probe_usage;
      auto run_probe = [&]() -> double {
        const ModelProfile& small = cfg_.pool.smallest();
        const std::string block = memory_block_for(call.app_id, desc_emb);
        const nlohmann::json preq =
            probe_request(parsed.body, small.model_id, block, cfg_.backend.max_probe_tokens);
        try {
          BackendResponse resp = client_for(small).complete(preq);
          probe_usage = resp.usage;
          if (!resp.has_logprobs || resp.logprobs.empty())
            fail(Errc::probe_malformed, "probe response carries no logprobs");
          const ProbeResult probe = ProbeResult::create(resp.content, resp.logprobs);
          probe_response = std::move(resp);
          return score_confidence(probe, cfg_.confidence_floor).value;
        } catch (const Error& e) {
          // Fail closed: a broken probe escalates rather than accepts.
          std::cerr << "[avr-gateway] probe failed, escalating: " << e.what() << "\n";
          probe_response.reset();
          if (!probe_usage) probe_usage = TokenUsage{};
          return 0.0;
        }
      };

      RouteResult route =
          decide_route(est, risk, threshold, cfg_.preroute_enabled, cfg_.pool, run_probe);

      BackendResponse winning;
      TokenUsage gen_usage;
      std::optional<TokenUsage> extra_probe;
      if (route.reason == Reason::confident_probe && probe_response) {
        winning = std::move(*probe_response);
        gen_usage = winning.usage;
      } else {
        const ModelProfile& target = cfg_.pool.by_tier(route.tier);
        nlohmann::json freq = forward_request(parsed.body, target.model_id);
        if (route.tier != cfg_.pool.smallest().tier && cfg_.memory.inject_for_large) {
          const std::string block = memory_block_for(call.app_id, desc_emb);
          freq = probe_request(parsed.body, target.model_id, block, 0);
          freq.erase("max_tokens");
          freq["logprobs"] = false;
        }
        try {
          winning = client_for(target).complete(freq);
        } catch (const Error& e) {
          nlohmann::json trace = {{"difficulty", est.d},
                                  {"risk", risk.risk},
                                  {"threshold", threshold},
                                  {"tier", route.tier},
                                  {"reason", reason_name(route.reason)}};
          if (route.confidence) trace["confidence"] = *route.confidence;
          send_error(res, Errc::backend_unavailable, e.what(), trace);
          return;
        }
        gen_usage = winning.usage;
        if (route.probe_charged) extra_probe = probe_usage.value_or(TokenUsage{});
      }

      RoutingOutcome outcome;
      outcome.outcome_id = "o-" + std::to_string(next_outcome_.fetch_add(1));
      outcome.call_ref = call.session_id + "/" + std::to_string(ledger_.calls_total() + 1);
      outcome.difficulty = est.d;
      outcome.confidence = route.confidence;
      outcome.risk = risk.risk;
      outcome.threshold_used = threshold;
      outcome.tier_chosen = route.tier;
      outcome.reason = route.reason;
      outcome.probe_charged = route.probe_charged;
      outcome.response_text = winning.content;
      outcome.guardrail_verification = route.guardrail_verification;
      outcome.cost = ledger_.charge(outcome, gen_usage, extra_probe, cfg_.pool);
      validate_outcome(outcome, cfg_.pool);

      {
        std::lock_guard lock(pending_mu_);
        pending_.emplace(outcome.outcome_id,
                         PendingOutcome{call.app_id, call.session_id, call.description, call.x,
                                        call.y, desc_emb});
        pending_order_.push_back(outcome.outcome_id);
        while (pending_order_.size() > kMaxPending) {
          pending_.erase(pending_order_.front());
          pending_order_.pop_front();
        }
      }

      nlohmann::json body = winning.body;
      body["avr"] = {{"outcome_id", outcome.outcome_id},
                     {"difficulty", {{"d_vis", est.d_vis},
                                     {"d_sem", est.d_sem},
                                     {"d", est.d},
                                     {"band", band_name(est.band)}}},
                     {"risk", risk.risk},
                     {"threshold", threshold},
                     {"tier", outcome.tier_chosen},
                     {"reason", reason_name(outcome.reason)},
                     {"probe_charged", outcome.probe_charged},
                     {"cost_usd", dollars(outcome.cost)},
                     {"guardrail_verification", outcome.guardrail_verification}};
      if (outcome.confidence) body["avr"]["confidence"] = *outcome.confidence;

      res.set_header("X-AVR-Outcome-Id", outcome.outcome_id);
      res.set_header("X-AVR-Tier", std::to_string(outcome.tier_chosen));
      res.set_header("X-AVR-Reason", reason_name(outcome.reason));
      res.set_header("X-AVR-Difficulty", std::to_string(est.d));
      res.set_header("X-AVR-Risk", std::to_string(risk.risk));
      res.set_header("X-AVR-Cost-Micros", std::to_string(outcome.cost));
      if (outcome.confidence)
        res.set_header("X-AVR-Confidence", std::to_string(*outcome.confidence));
      res.set_content(body.dump(), "application/json");
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const std::exception& e) {
      send_error(res, Errc::bad_request, e.what());
    }
  }

  void handle_feedback(const httplib::Request& req, httplib::Response& res) {
    try {
      nlohmann::json j = nlohmann::json::parse(req.body, nullptr, false);
      if (j.is_discarded() || !j.contains("outcome_id") || !j.contains("success"))
        fail(Errc::bad_request, "feedback needs outcome_id and success");
      const std::string outcome_id = j["outcome_id"].get<std::string>();

      PendingOutcome pending;
      {
        std::lock_guard lock(pending_mu_);
        auto it = pending_.find(outcome_id);
        if (it == pending_.end()) fail(Errc::unknown_outcome, "unknown outcome " + outcome_id);
        pending = it->second;
      }

      FeedbackRecord fb;
      fb.success = j["success"].get<bool>();
      if (j.contains("corrected_coords")) {
        fb.corrected_coords = {j["corrected_coords"].at(0).get<int>(),
                               j["corrected_coords"].at(1).get<int>()};
      }
      const auto now_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::system_clock::now().time_since_epoch())
                              .count();
      MemoryEntry entry = make_feedback_entry(outcome_id, pending.app_id, pending.session_id,
                                              pending.description, pending.x, pending.y,
                                              *pending.desc_embedding, fb, now_ms);
      bool stored = true;
      try {
        memory_.append(entry);
      } catch (const Error& e) {
        if (e.code() != Errc::duplicate_id) throw;
        stored = false;  // idempotent on duplicate feedback
      }
      res.set_content(nlohmann::json({{"ok", true}, {"stored", stored}}).dump(),
                      "application/json");
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const std::exception& e) {
      send_error(res, Errc::bad_request, e.what());
    }
  }

  void handle_metrics(httplib::Response& res) {
    nlohmann::json body;
    if (ledger_.calls_total() == 0) {
      body = {{"calls_total", 0},
              {"escalations", 0},
              {"probe_charges", 0},
              {"alpha", 0.0},
              {"savings", nullptr},
              {"tier_shares", {{"small", 0.0}, {"large", 0.0}, {"large_guardrail", 0.0}}}};
    } else {
      body = ledger_.report().to_json();
    }
    res.set_content(body.dump(), "application/json");
  }

  static constexpr std::size_t kMaxPending = 10000;

  GatewayConfig cfg_;
  std::unique_ptr<Embedder> embedder_;
  KnowledgeBase difficulty_kb_;
  KnowledgeBase safety_kb_;
  MemoryStore memory_;
  CostLedger ledger_;
  httplib::Server server_;
  std::string host_;
  int port_ = 0;
  std::atomic<std::uint64_t> next_outcome_{1};
  std::mutex pending_mu_;
  std::unordered_map<std::string, PendingOutcome> pending_;
  std::deque<std::string> pending_order_;
};

}  // namespace avr
