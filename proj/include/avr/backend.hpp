#pragma once

#include <optional>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "avr/confidence.hpp"
#include "avr/core.hpp"
#include "avr/costmodel.hpp"
#include "avr/errors.hpp"
#include "avr/memory.hpp"

namespace avr {

struct BackendResponse {
  nlohmann::json body;            // the backend's completion, verbatim
  std::string content;            // choices[0].message.content
  std::vector<double> logprobs;   // per-token, when requested and present
  bool has_logprobs = false;
  TokenUsage usage;
};

// Builds the probe request: non-streaming, logprobs on, output capped, memory
// block (when any) inserted as a system message ahead of the final user turn.
inline nlohmann::json probe_request(const nlohmann::json& original, const std::string& model_id,
                                    const std::string& memory_block, int max_probe_tokens) {
  nlohmann::json req = original;
  req["model"] = model_id;
  req["stream"] = false;
  req["logprobs"] = true;
  req["max_tokens"] = max_probe_tokens;
  if (!memory_block.empty() && req.contains("messages") && req["messages"].is_array() &&
      !req["messages"].empty()) {
    nlohmann::json memory_msg = {{"role", "system"}, {"content", memory_block}};
    auto& msgs = req["messages"];
    msgs.insert(msgs.end() - 1, memory_msg);
  }
  return req;
}

inline nlohmann::json forward_request(const nlohmann::json& original, const std::string& model_id) {
  nlohmann::json req = original;
  req["model"] = model_id;
  req["stream"] = false;
  return req;
}

// One hop to an OpenAI-compatible chat-completions backend.
class BackendClient {
 public:
  BackendClient(std::string endpoint, std::string model_id, int timeout_ms, bool supports_logprobs)
      : endpoint_(std::move(endpoint)),
        model_id_(std::move(model_id)),
        timeout_ms_(timeout_ms),
        supports_logprobs_(supports_logprobs) {}

  const std::string& model_id() const { return model_id_; }
  bool supports_logprobs() const { return supports_logprobs_; }

  BackendResponse complete(const nlohmann::json& request) const {
    httplib::Client client(endpoint_);
    client.set_tcp_nodelay(true);
    client.set_connection_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
    client.set_read_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
    auto res = client.Post("/v1/chat/completions", request.dump(), "application/json");
    if (!res)
      fail(Errc::backend_unavailable, "backend " + endpoint_ + " unreachable");
    if (res->status != 200)
      fail(Errc::backend_unavailable,
           "backend " + endpoint_ + " returned " + std::to_string(res->status));
    return parse_completion(res->body);
  }

  static BackendResponse parse_completion(const std::string& body) {
    BackendResponse out;
    try {
      out.body = nlohmann::json::parse(body);
      const auto& choice = out.body.at("choices").at(0);
      out.content = choice.at("message").at("content").get<std::string>();
      if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
          choice["logprobs"].contains("content")) {
        for (const auto& tok : choice["logprobs"]["content"]) {
          if (!tok.contains("logprob"))
            fail(Errc::probe_malformed, "token record missing logprob");
          out.logprobs.push_back(tok["logprob"].get<double>());
        }
        out.has_logprobs = true;
      }
      if (out.body.contains("usage")) {
        out.usage.input = out.body["usage"].value("prompt_tokens", std::int64_t{0});
        out.usage.output = out.body["usage"].value("completion_tokens", std::int64_t{0});
      }
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::backend_unavailable, std::string("malformed completion: ") + e.what());
    }
    return out;
  }

 private:
  std::string endpoint_;
  std::string model_id_;
  int timeout_ms_;
  bool supports_logprobs_;
};

}  // namespace avr
