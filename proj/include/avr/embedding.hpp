#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "avr/core.hpp"
#include "avr/errors.hpp"

namespace avr {

inline constexpr int kEmbeddingDim = 384;
inline constexpr int kCropSize = 100;

enum class SourceKind { image, text };

// Unit-normalized vector in the shared image/text space.
class Embedding {
 public:
  static Embedding from_raw(std::vector<double> values, SourceKind kind) {
    if (static_cast<int>(values.size()) != kEmbeddingDim)
      fail(Errc::dimension_mismatch,
           "expected dimension " + std::to_string(kEmbeddingDim) + ", got " +
               std::to_string(values.size()));
    double norm2 = 0.0;
    for (double v : values) norm2 += v * v;
    if (norm2 <= 0.0) fail(Errc::out_of_range, "cannot normalize a zero vector");
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : values) v *= inv;
    return Embedding(std::move(values), kind);
  }

  // Basis vector along `axis`; handy for fixtures.
  static Embedding unit_axis(int axis, SourceKind kind) {
    std::vector<double> v(kEmbeddingDim, 0.0);
    v[static_cast<std::size_t>(axis)] = 1.0;
    return Embedding(std::move(v), kind);
  }

  const std::vector<double>& values() const { return values_; }
  SourceKind kind() const { return kind_; }

  double norm() const {
    double n = 0.0;
    for (double v : values_) n += v * v;
    return std::sqrt(n);
  }

 private:
  Embedding(std::vector<double> values, SourceKind kind)
      : values_(std::move(values)), kind_(kind) {}
  std::vector<double> values_;
  SourceKind kind_;
};

// Dot product of unit vectors, clamped to [-1, 1].
inline double cosine(const Embedding& a, const Embedding& b) {
  if (a.values().size() != b.values().size())
    fail(Errc::dimension_mismatch, "embedding dimensions differ");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) dot += a.values()[i] * b.values()[i];
  return std::clamp(dot, -1.0, 1.0);
}

// 100x100 patch and where it was taken from.
struct Crop {
  Image pixels;
  int origin_x = 0;
  int origin_y = 0;
};

// Crop nominally centered at (x, y); the window is translated to stay fully
// inside the image near edges, preserving the exact 100x100 size.
inline Crop extract_crop(const Image& screenshot, int x, int y) {
  if (!screenshot.valid()) fail(Errc::bad_request, "invalid screenshot raster");
  if (screenshot.width < kCropSize || screenshot.height < kCropSize)
    fail(Errc::screenshot_too_small, "screenshot smaller than " + std::to_string(kCropSize) +
                                         "x" + std::to_string(kCropSize));
  if (x < 0 || x >= screenshot.width || y < 0 || y >= screenshot.height)
    fail(Errc::out_of_bounds, "crop center outside screenshot");
  const int ox = std::clamp(x - kCropSize / 2, 0, screenshot.width - kCropSize);
  const int oy = std::clamp(y - kCropSize / 2, 0, screenshot.height - kCropSize);
  Crop crop;
  crop.origin_x = ox;
  crop.origin_y = oy;
  crop.pixels.width = kCropSize;
  crop.pixels.height = kCropSize;
  crop.pixels.pixels.resize(static_cast<std::size_t>(kCropSize) * kCropSize * 3);
  for (int row = 0; row < kCropSize; ++row) {
    const std::uint8_t* src = screenshot.at(ox, oy + row);
    std::uint8_t* dst = crop.pixels.at(0, row);
    std::copy(src, src + static_cast<std::size_t>(kCropSize) * 3, dst);
  }
  return crop;
}

struct EmbedderConfig {
  enum class Kind { deterministic_stub, remote_service };
  Kind kind = Kind::deterministic_stub;
  std::string endpoint;  // remote only
  int timeout_ms = 2000;
  int max_inflight = 8;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual Embedding embed_image(const Crop& crop) = 0;
  virtual Embedding embed_text(std::string_view text) = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t len) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= data[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline double to_unit(std::uint64_t u) {
  return static_cast<double>(static_cast<std::int64_t>(u)) / 9.223372036854775808e18;
}

// Spreads one chunk hash across all output dimensions with index-salted mixes.
inline void accumulate_chunk(std::uint64_t chunk_hash, std::array<double, kEmbeddingDim>& acc) {
  for (int j = 0; j < kEmbeddingDim; ++j) {
    acc[j] += to_unit(splitmix64(chunk_hash ^ (0x9E3779B97F4A7C15ULL * (j + 1))));
  }
}

inline Embedding finish(std::array<double, kEmbeddingDim>& acc, SourceKind kind) {
  double norm2 = 0.0;
  for (double v : acc) norm2 += v * v;
  if (norm2 <= 1e-24) acc[0] = 1.0;  // degenerate cancellation, keep a valid vector
  return Embedding::from_raw(std::vector<double>(acc.begin(), acc.end()), kind);
}

}  // namespace detail

// Deterministic hash embedder. Text embeds as a bag of whitespace tokens so that
// descriptions sharing words land near each other; images embed 48-byte pixel
// chunks salted with their position so that nearby crops stay similar without
// ever colliding exactly.
class StubEmbedder final : public Embedder {
 public:
  Embedding embed_image(const Crop& crop) override {
    const auto& bytes = crop.pixels.pixels;
    std::array<double, kEmbeddingDim> acc{};
    constexpr std::size_t kChunk = 48;
    std::size_t index = 0;
    for (std::size_t off = 0; off < bytes.size(); off += kChunk, ++index) {
      const std::size_t len = std::min(kChunk, bytes.size() - off);
      std::uint64_t h = detail::fnv1a64(bytes.data() + off, len);
      h = detail::splitmix64(h ^ (0xA0761D6478BD642FULL + index * 0x9E3779B97F4A7C15ULL));
      detail::accumulate_chunk(h, acc);
    }
    return detail::finish(acc, SourceKind::image);
  }

  Embedding embed_text(std::string_view text) override {
    if (text.empty()) fail(Errc::empty_text, "cannot embed empty text");
    std::array<double, kEmbeddingDim> acc{};
    std::size_t i = 0;
    bool any = false;
    while (i < text.size()) {
      while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
      std::size_t start = i;
      while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
      if (i > start) {
        any = true;
        std::uint64_t h = detail::fnv1a64(
            reinterpret_cast<const std::uint8_t*>(text.data() + start), i - start);
        detail::accumulate_chunk(detail::splitmix64(h), acc);
      }
    }
    if (!any) fail(Errc::empty_text, "text contains no tokens");
    return detail::finish(acc, SourceKind::text);
  }
};

// The remote embedding client lives in remote_embedder.hpp to keep httplib out
// of translation units that only need the stub.

}  // namespace avr
