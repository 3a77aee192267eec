#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <string>

#include "avr/gateway.hpp"
#include "avr/kbtool.hpp"
#include "support/mock_backend.hpp"

namespace avr::testing {

// Embedder wrapper that counts invocations; the single-embedding guarantee is
// asserted against these counters.
class CountingEmbedder final : public Embedder {
 public:
  explicit CountingEmbedder(std::shared_ptr<std::atomic<int>> images,
                            std::shared_ptr<std::atomic<int>> texts)
      : images_(std::move(images)), texts_(std::move(texts)) {}

  Embedding embed_image(const Crop& crop) override {
    images_->fetch_add(1);
    return inner_.embed_image(crop);
  }
  Embedding embed_text(std::string_view text) override {
    texts_->fetch_add(1);
    return inner_.embed_text(text);
  }

 private:
  StubEmbedder inner_;
  std::shared_ptr<std::atomic<int>> images_;
  std::shared_ptr<std::atomic<int>> texts_;
};

inline constexpr const char* kHardPrototype =
    "seventeenth glyph cluster within crowded ribbon strip";
inline constexpr const char* kDangerousPrototype =
    "erase entire production database immediately";

// Writes difficulty/safety KBs whose prototypes share no vocabulary with easy
// descriptions, so band placement under the stub embedder is stable.
inline void write_fixture_kbs(const std::filesystem::path& dir) {
  StubEmbedder stub;
  Image checker = Image::solid(100, 100, 0, 0, 0);
  for (int y = 0; y < 100; ++y)
    for (int x = 0; x < 100; ++x)
      if (((x / 10) + (y / 10)) % 2 == 0) {
        auto* px = checker.at(x, y);
        px[0] = 240;
        px[1] = 240;
        px[2] = 240;
      }
  Crop checker_crop{checker, 0, 0};

  KnowledgeBase difficulty;
  difficulty.name = "difficulty";
  difficulty.entries.emplace_back("hard", "textual", "dense positional target",
                                  stub.embed_text(kHardPrototype));
  difficulty.entries.emplace_back("easy", "textual", "plain button",
                                  stub.embed_text("press big start button"));
  difficulty.entries.emplace_back("hard", "visual", "checker ribbon",
                                  stub.embed_image(checker_crop));
  save_kb(difficulty, dir / "difficulty_kb.json");

  KnowledgeBase safety;
  safety.name = "safety";
  safety.entries.emplace_back("dangerous", "textual", "mass destruction",
                              stub.embed_text(kDangerousPrototype));
  safety.entries.emplace_back("safe", "textual", "routine save",
                              stub.embed_text("store current draft quietly"));
  save_kb(safety, dir / "safety_kb.json");
}

inline GatewayConfig fixture_config(const std::filesystem::path& dir, const std::string& backend_url,
                                    const std::string& large_url = "") {
  ModelProfile small;
  small.model_id = "mock-7b";
  small.tier = 1;
  small.capability = 0.55;
  small.input_price = micros_from_dollars(0.04);
  small.output_price = micros_from_dollars(0.40);
  small.probe_fraction = 0.1;
  small.endpoint = backend_url;
  small.supports_logprobs = true;
  ModelProfile large = small;
  large.model_id = "mock-72b";
  large.tier = 2;
  large.capability = 0.85;
  large.input_price = micros_from_dollars(0.27);
  large.output_price = micros_from_dollars(0.90);
  large.endpoint = large_url.empty() ? backend_url : large_url;

  GatewayConfig cfg;
  cfg.listen = "127.0.0.1:0";
  cfg.pool = ModelPool({small, large});
  cfg.difficulty_kb_path = dir / "difficulty_kb.json";
  cfg.safety_kb_path = dir / "safety_kb.json";
  cfg.memory.path = dir / "memory.jsonl";
  cfg.backend.timeout_ms = 2000;
  return cfg;
}

inline std::string screenshot_b64() {
  static const std::string encoded = base64_encode(Image::solid(200, 150, 180, 182, 185).to_ppm());
  return encoded;
}

inline nlohmann::json completion_request(const std::string& description) {
  return {{"model", "auto"},
          {"messages",
           nlohmann::json::array(
               {{{"role", "user"},
                 {"content",
                  nlohmann::json::array(
                      {{{"type", "text"}, {"text", description}},
                       {{"type", "image_url"},
                        {"image_url",
                         {{"url", "data:image/x-portable-pixmap;base64," + screenshot_b64()}}}}})}}})}};
}

}  // namespace avr::testing
