#pragma once

#include <cstdint>
#include <string_view>

namespace openset {

/// SplitMix64 finalizer. Used to derive independent sub-seeds so every random
/// stream is a pure function of (seed, stream indices).
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a) noexcept {
  return mix64(mix64(seed) ^ mix64(a + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept {
  return derive_seed(derive_seed(seed, a), b);
}

/// FNV-1a, for deriving per-subject seeds from subject ids.
constexpr std::uint64_t hash_string(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// xoshiro256** generator with its own uniform and Gaussian transforms.
///
/// The standard library's distributions are implementation-defined, so the
/// transforms live here: uniform() takes the top 53 bits, normal() is the
/// polar Box-Muller method with the spare value cached. Output is therefore
/// identical across compilers and platforms for a given seed.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept;

  /// Uniform on [0, 1).
  double uniform() noexcept;
  /// Uniform on (0, 1); never returns 0.
  double uniform_open() noexcept;
  /// Standard normal draw.
  double normal() noexcept;
  double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace openset
