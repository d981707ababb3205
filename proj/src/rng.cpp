#include "dtwcert/rng.hpp"

#include <cmath>
#include <numbers>

namespace dtwcert {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ mix64(stream + 1));
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double radius = std::sqrt(-2.0 * std::log(uniform_pos()));
  const double angle = 2.0 * std::numbers::pi * uniform();
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

double Rng::laplace() {
  // midpoint lattice keeps u strictly inside (-1/2, 1/2)
  const double u = (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53 - 0.5;
  return u < 0 ? std::log1p(2.0 * u) : -std::log1p(-2.0 * u);
}

}  // namespace dtwcert
