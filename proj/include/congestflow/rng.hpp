#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace congestflow {

// All randomness in the library flows from a single master seed through
// named substreams, so that any phase can be replayed in isolation.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : base_(mix(seed)), eng_(base_) {}

  // Derives an independent stream keyed by (this stream, tag, index).
  Rng substream(std::string_view tag, std::uint64_t index = 0) const {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (char c : tag) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
    Rng r(0);
    r.base_ = mix(base_ ^ mix(h) ^ mix(0x9e3779b97f4a7c15ull * (index + 1)));
    r.eng_.seed(r.base_);
    return r;
  }

  double uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(eng_);
  }

  // inclusive range
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(eng_);
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t next() { return eng_(); }

  std::mt19937_64& engine() { return eng_; }

private:
  static std::uint64_t mix(std::uint64_t x) {  // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  std::uint64_t base_;
  std::mt19937_64 eng_;
};

}  // namespace congestflow
