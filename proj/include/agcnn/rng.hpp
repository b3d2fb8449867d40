#pragma once

#include <cstdint>

namespace agcnn {

// splitmix64: tiny, fast, and identical on every platform. All randomness
// in the project flows through this so that (seed, config, data order)
// fully determine results.
inline uint64_t splitmix64(uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Derives a stream seed from (seed, index). Used for replication and fold
// seeds so adding replications never reshuffles earlier ones.
inline uint64_t derive_seed(uint64_t seed, uint64_t index) {
  uint64_t s = seed ^ (0xD1B54A32D192ED03ULL * (index + 1));
  return splitmix64(s);
}

class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : state_(seed) {}

  uint64_t next_u64() { return splitmix64(state_); }

  // uniform in [0, 1)
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // uniform integer in [0, n)
  uint64_t next_below(uint64_t n) { return next_u64() % n; }

  uint64_t state() const { return state_; }

 private:
  uint64_t state_;
};

// FNV-1a over a byte stream; used for corpus/vocabulary content hashes.
class Fnv1a {
 public:
  void update(const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001B3ULL;
    }
  }

  void update_u64(uint64_t v) { update(&v, sizeof(v)); }

  uint64_t digest() const { return hash_; }

 private:
  uint64_t hash_ = 0xCBF29CE484222325ULL;
};

}  // namespace agcnn
