#pragma once

#include <cstdint>

namespace avr {

// Counter-based per-call random streams: the stream for call i depends only on
// (seed, i), so scenario runs are deterministic regardless of how calls are
// partitioned across threads.
class CallRng {
 public:
  CallRng(std::uint64_t seed, std::uint64_t call_index)
      : state_(mix(seed ^ (0x9E3779B97F4A7C15ULL * (call_index + 1)))) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

  bool bernoulli(double p) { return uniform() < p; }

  // Beta(a, b) for small integer shapes via the order-statistic construction:
  // the a-th smallest of a+b-1 uniforms.
  double beta_int(int a, int b) {
    const int n = a + b - 1;
    double kth = 0.0;
    // selection without allocation; n is tiny
    double vals[24];
    for (int i = 0; i < n; ++i) vals[i] = uniform();
    for (int i = 0; i < a; ++i) {
      int min_at = i;
      for (int j = i + 1; j < n; ++j)
        if (vals[j] < vals[min_at]) min_at = j;
      double t = vals[i];
      vals[i] = vals[min_at];
      vals[min_at] = t;
      kth = vals[i];
    }
    return kth;
  }

 private:
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  std::uint64_t state_;
};

}  // namespace avr
