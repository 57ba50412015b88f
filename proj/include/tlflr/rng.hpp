#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace tlflr {

/// splitmix64 finalizer; the basic mixing block for seed derivation.
std::uint64_t mix64(std::uint64_t x);

/// FNV-1a over the bytes of a label.
std::uint64_t hash_str(std::string_view s);

/// Stream-splitting rule used everywhere: a child stream for (label, index)
/// under a parent seed is mix64(seed ^ mix64(hash_str(label) ^ mix64(index))).
/// Distinct (label, index) pairs give independent streams, reproducibly.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label,
                          std::uint64_t index = 0);

/// Deterministic generator: mt19937_64 (whose word sequence the standard pins
/// down) plus our own distribution code, so results do not depend on the
/// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  /// Standard normal via Marsaglia's polar method (one cached spare).
  double normal();

  /// Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace tlflr
