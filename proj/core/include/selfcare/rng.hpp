#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace selfcare {

// SplitMix64 finaliser; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t s = mix_seed(base);
  for (auto p : parts) s = mix_seed(s ^ mix_seed(p + 0x632BE59BD9B4E019ull));
  return s;
}

using Rng = std::mt19937_64;

// Portable standard normal (Box-Muller on top of the 64-bit engine), so that
// seeded output does not depend on the standard library's distribution code.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : rng_(seed) {}

  double operator()();
  double uniform();  // [0, 1)
  Rng& engine() { return rng_; }

 private:
  Rng rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace selfcare
