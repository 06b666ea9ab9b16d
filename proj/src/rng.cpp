#include "stacklab/rng.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

namespace stacklab {

std::uint64_t sequence_key(std::uint64_t seed, std::span<const std::string> ids) {
  std::uint64_t key = combine_key(seed, ids.size());
  for (const auto& id : ids) {
    key = combine_key(key, hash_bytes(id));
  }
  return key;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x = engine_();
  while (x >= limit) {
    x = engine_();
  }
  return x % n;
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) {
    u1 = uniform();
  }
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace stacklab
