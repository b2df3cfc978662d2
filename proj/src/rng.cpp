#include "spde/rng.hpp"

#include <cmath>
#include <numbers>

namespace spde {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kKeySalt = 0xA0761D6478BD642FULL;
constexpr std::uint64_t kLabelSalt = 0xE7037ED1A0B428DBULL;

// SplitMix64 finalizer.
std::uint64_t mix(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

Rng::Rng(std::uint64_t seed) : key_(mix(seed + kKeySalt)) {}

std::uint64_t Rng::next_u64() {
  ++counter_;
  return mix(key_ + counter_ * kGolden);
}

double Rng::uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

void Rng::fill_normal(std::span<double> out) {
  for (double& v : out) v = normal();
}

Rng Rng::split(std::string_view label) const {
  Rng child(0);
  child.key_ = mix(key_ ^ mix(fnv1a(label) + kLabelSalt));
  child.counter_ = 0;
  return child;
}

Rng Rng::split(std::uint64_t index) const {
  Rng child(0);
  child.key_ = mix(key_ ^ mix(index * kGolden + kLabelSalt));
  child.counter_ = 0;
  return child;
}

}  // namespace spde
