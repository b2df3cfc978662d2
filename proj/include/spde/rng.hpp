#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace spde {

/// Counter-based splittable PRNG. Each draw is a pure function of
/// (key, counter), so a stream is fully determined by its key: equal seeds
/// give equal streams across runs and platforms. Child streams are derived
/// by labeled splits from the parent key alone (never from the draw
/// position), which makes fan-out to parallel workers coordination-free.
///
/// A stream is single-owner mutable: share by splitting, never by
/// concurrent mutation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform draw in the open interval (0, 1).
  double uniform();

  /// Standard normal draw (Box-Muller, pair cached).
  double normal();

  void fill_normal(std::span<double> out);

  /// Independent child stream keyed by a text label.
  Rng split(std::string_view label) const;

  /// Independent child stream keyed by an index (for per-item streams).
  Rng split(std::uint64_t index) const;

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace spde
