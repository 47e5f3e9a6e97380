#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "spinbayes/constants.hpp"

namespace spinbayes {

// splitmix64: used only to turn (master seed, stream index) into well-mixed
// engine seeds so per-trial streams are independent and order-free.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// mt19937_64 with explicit double/normal generation so every result is
// bit-identical across platforms (std::uniform_real_distribution and
// std::normal_distribution are not specified tightly enough for that).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Independent stream for a given trial/sample index under one master seed.
  static Rng for_stream(std::uint64_t master_seed, std::uint64_t stream) {
    std::uint64_t s = master_seed;
    (void)splitmix64(s);
    s ^= (stream + 1) * 0x9e3779b97f4a7c15ull;
    return Rng(splitmix64(s));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller; caches the second variate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

} // namespace spinbayes
