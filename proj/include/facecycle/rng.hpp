#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace facecycle {

/// Deterministic random source. All transforms (bounded ints, normals) are
/// implemented here rather than via std distributions so that a given seed
/// produces the same stream on every standard library implementation.
class Rng {
 public:
  explicit Rng(uint64_t seed = 1) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, n). n must be > 0.
  uint64_t bounded(uint64_t n) {
    // Lemire multiply-shift; bias is at most n / 2^64.
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<uint64_t>(m >> 64);
  }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller. Consumes two engine draws per call.
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
  float normal(float mean, float stddev) { return mean + stddev * static_cast<float>(normal()); }

  std::string serialize() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }
  void restore(const std::string& s) {
    std::istringstream is(s);
    is >> engine_;
    if (is.fail()) throw std::runtime_error("bad rng state");
  }

  bool operator==(const Rng& o) const { return engine_ == o.engine_; }

 private:
  std::mt19937_64 engine_;
};

/// FNV-1a, used for config hashing and seed derivation.
inline uint64_t fnv1a(const void* data, size_t len, uint64_t h = 14695981039346656037ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}
inline uint64_t fnv1a(const std::string& s, uint64_t h = 14695981039346656037ULL) {
  return fnv1a(s.data(), s.size(), h);
}

/// Stable child seed for a named substream ("G", "F", "data", ...).
inline uint64_t derive_seed(uint64_t base, const std::string& tag) {
  uint64_t h = fnv1a(&base, sizeof(base));
  return fnv1a(tag, h);
}

}  // namespace facecycle
