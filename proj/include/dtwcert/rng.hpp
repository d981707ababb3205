#pragma once

#include <cstdint>
#include <random>

namespace dtwcert {

/// splitmix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x);

/// Seed of substream `stream` under master `seed`: mix64(seed ^ mix64(stream + 1)).
/// Per-window streams use the window's origin index.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream);

/// mt19937_64 with portable variate transforms (no std::*_distribution, whose output
/// is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform on (0, 1].
  double uniform_pos() { return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53; }
  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();
  /// Laplace(0, 1) by inversion.
  double laplace();

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dtwcert
