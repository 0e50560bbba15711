#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace susmap {

// Counter-based generator: output k is a strong 64-bit hash of (key, k), so
// draws are independent of evaluation order and streams can be forked by
// label or by integer coordinates without sharing state. One master seed
// drives a whole run; every module derives its own named stream.
class RngStream {
 public:
  RngStream() : key_(0) {}
  explicit RngStream(std::uint64_t key) : key_(key) {}

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  static std::uint64_t combine(std::uint64_t a, std::uint64_t b) {
    return mix(a + 0x9e3779b97f4a7c15ULL * (b + 0x632be59bd9b4e019ULL));
  }

  // Named stream derived from a master seed.
  static RngStream from(std::uint64_t master, std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a 64
    for (unsigned char c : label) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return RngStream(combine(mix(master), h));
  }

  // Keyed substream, e.g. one per (unit, time) cell or per replicate.
  RngStream sub(std::uint64_t a, std::uint64_t b = 0) const {
    return RngStream(combine(key_, combine(a, b)));
  }

  std::uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  // Strictly inside (0,1); 53-bit resolution.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  // Box-Muller, two uniforms per draw.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double exponential(double mean) { return -mean * std::log(uniform()); }

  // Unbiased integer in [0, n) via rejection.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace susmap
