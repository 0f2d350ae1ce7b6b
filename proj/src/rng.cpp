#include "teachsim/rng.hpp"

#include <cmath>
#include <numbers>

namespace teachsim {

std::uint64_t Rng::below(std::uint64_t n) {
  if (n <= 1) return 0;
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t r;
  do {
    r = next_u64();
  } while (r >= limit);
  return r % n;
}

double Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  const double u1 = uniform_open();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

Rng Rng::split(std::uint64_t label) const {
  Rng child;
  child.key_ = mix(key_ ^ mix(label + 0x243f6a8885a308d3ULL));
  return child;
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t label) {
  return Rng::mix(Rng::mix(parent) ^ Rng::mix(label * 0x9e3779b97f4a7c15ULL + 1));
}

}  // namespace teachsim
