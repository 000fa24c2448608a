#pragma once

#include <cstdint>
#include <string_view>

namespace teamrl {

// Counter-based pseudo-random stream: output k of stream s is a pure
// function of (key(s), k), so replaying a run never depends on draw
// interleaving elsewhere. Streams are split by name or index; all
// randomness in a run descends from one root seed this way.
class RngStream {
 public:
  explicit RngStream(uint64_t key) : key_(key) {}

  static RngStream root(uint64_t seed) { return RngStream(mix(seed ^ kRootSalt)); }

  RngStream split(std::string_view name) const {
    return RngStream(mix(key_ ^ hash_name(name)));
  }
  RngStream split(uint64_t index) const {
    return RngStream(mix(key_ ^ mix(index + kIndexSalt)));
  }

  uint64_t next_u64() { return mix(key_ + (++counter_) * kGolden); }

  // [0, 1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in the closed range [lo, hi].
  int64_t uniform_int(int64_t lo, int64_t hi) {
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int64_t>(next_u64() % span);
  }

  uint64_t key() const { return key_; }
  uint64_t counter() const { return counter_; }

 private:
  static constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ull;
  static constexpr uint64_t kRootSalt = 0x5b4c6d1f2e8a9301ull;
  static constexpr uint64_t kIndexSalt = 0x1d8e4f0a6b3c7925ull;

  // splitmix64 finalizer
  static uint64_t mix(uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  static uint64_t hash_name(std::string_view name) {
    // FNV-1a
    uint64_t h = 0xcbf29ce484222325ull;
    for (const char c : name) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ull;
    }
    return mix(h);
  }

  uint64_t key_;
  uint64_t counter_ = 0;
};

}  // namespace teamrl
