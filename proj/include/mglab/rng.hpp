#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace mglab {

// Counter-based deterministic generator. Draws are a pure function of
// (key, counter), so streams can be split per (experiment, seed, stream id)
// and parallel schedules cannot reorder anything.
class RngStream {
 public:
  RngStream() = default;
  explicit RngStream(std::uint64_t key) : key_(key) {}

  static RngStream root(std::uint64_t seed, std::string_view name) {
    return RngStream(mix64(mix64(0x9e3779b97f4a7c15ull ^ fnv1a(name)) + seed));
  }

  // Independent substream; children with distinct ids never collide.
  RngStream child(std::uint64_t id) const {
    return RngStream(mix64(key_ ^ mix64(id + 0x632be59bd9b4e019ull)));
  }

  std::uint64_t next_u64() {
    return mix64(key_ + 0x9e3779b97f4a7c15ull * ++counter_);
  }

  // Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Index drawn from a probability vector (rows are validated upstream to
  // sum to 1 within 1e-12). Walks the CDF; remainder mass goes to the last
  // strictly positive entry so the draw is always a valid index.
  int next_categorical(std::span<const double> probs) {
    const double u = next_double();
    double cum = 0.0;
    int last_positive = 0;
    for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
      if (probs[i] > 0.0) last_positive = i;
      cum += probs[i];
      if (u < cum) return i;
    }
    return last_positive;
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  static std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    return h;
  }

  std::uint64_t key_ = 0x853c49e6748fea9bull;
  std::uint64_t counter_ = 0;
};

}  // namespace mglab
