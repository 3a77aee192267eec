#pragma once

#include <memory>
#include <semaphore>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "avr/embedding.hpp"

namespace avr {

inline std::string base64_encode(const std::string& in) {
  static const char* tbl = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((in.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 2 < in.size()) {
    std::uint32_t n = (static_cast<std::uint8_t>(in[i]) << 16) |
                      (static_cast<std::uint8_t>(in[i + 1]) << 8) |
                      static_cast<std::uint8_t>(in[i + 2]);
    out += tbl[(n >> 18) & 63];
    out += tbl[(n >> 12) & 63];
    out += tbl[(n >> 6) & 63];
    out += tbl[n & 63];
    i += 3;
  }
  if (i + 1 == in.size()) {
    std::uint32_t n = static_cast<std::uint8_t>(in[i]) << 16;
    out += tbl[(n >> 18) & 63];
    out += tbl[(n >> 12) & 63];
    out += "==";
  } else if (i + 2 == in.size()) {
    std::uint32_t n = (static_cast<std::uint8_t>(in[i]) << 16) |
                      (static_cast<std::uint8_t>(in[i + 1]) << 8);
    out += tbl[(n >> 18) & 63];
    out += tbl[(n >> 12) & 63];
    out += tbl[(n >> 6) & 63];
    out += '=';
  }
  return out;
}

inline std::string base64_decode(const std::string& in) {
  auto val = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  std::string out;
  int buf = 0, bits = 0;
  for (char c : in) {
    if (c == '=' || c == '\n' || c == '\r') continue;
    int v = val(c);
    if (v < 0) fail(Errc::bad_request, "invalid base64");
    buf = (buf << 6) | v;
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out += static_cast<char>((buf >> bits) & 0xFF);
    }
  }
  return out;
}

// Speaks the minimal JSON POST contract: {"kind": "image"|"text", "data": ...}
// -> {"embedding": [D reals]}. The returned vector is normalized locally rather
// than trusted.
class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(EmbedderConfig cfg)
      : cfg_(std::move(cfg)),
        inflight_(std::make_unique<std::counting_semaphore<>>(
            std::max(1, cfg_.max_inflight))) {
    if (cfg_.endpoint.empty()) fail(Errc::bad_config, "remote embedder requires an endpoint");
  }

  Embedding embed_image(const Crop& crop) override {
    return post("image", base64_encode(crop.pixels.to_ppm()), SourceKind::image);
  }

  Embedding embed_text(std::string_view text) override {
    if (text.empty()) fail(Errc::empty_text, "cannot embed empty text");
    return post("text", std::string(text), SourceKind::text);
  }

 private:
  Embedding post(const std::string& kind, const std::string& data, SourceKind out_kind) {
    inflight_->acquire();
    struct Release {
      std::counting_semaphore<>* s;
      ~Release() { s->release(); }
    } release{inflight_.get()};

    httplib::Client client(cfg_.endpoint);
    client.set_connection_timeout(0, cfg_.timeout_ms * 1000);
    client.set_read_timeout(cfg_.timeout_ms / 1000, (cfg_.timeout_ms % 1000) * 1000);
    nlohmann::json body = {{"kind", kind}, {"data", data}};
    auto res = client.Post("/embed", body.dump(), "application/json");
    if (!res || res->status != 200)
      fail(Errc::embedder_unavailable,
           "embedding service at " + cfg_.endpoint +
               (res ? " returned " + std::to_string(res->status) : " is unreachable"));
    try {
      auto parsed = nlohmann::json::parse(res->body);
      std::vector<double> values = parsed.at("embedding").get<std::vector<double>>();
      return Embedding::from_raw(std::move(values), out_kind);
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::embedder_unavailable, std::string("bad embedding response: ") + e.what());
    }
  }

  EmbedderConfig cfg_;
  std::unique_ptr<std::counting_semaphore<>> inflight_;
};

inline std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& cfg) {
  if (cfg.kind == EmbedderConfig::Kind::deterministic_stub)
    return std::make_unique<StubEmbedder>();
  return std::make_unique<RemoteEmbedder>(cfg);
}

}  // namespace avr
