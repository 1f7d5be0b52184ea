#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tkrr {

/// Derives an independent sub-seed for a named component from a run seed.
/// The mapping is fixed (FNV-1a of the name mixed through splitmix64) so that
/// every component of a run can be reproduced in isolation.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view component);

/// Seeded random source with platform-independent distributions.
///
/// The standard library leaves the algorithms behind std::normal_distribution
/// and friends unspecified, so draws go through Boost.Random on top of a
/// std::mt19937_64 engine.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform draw on [0, 1).
  double uniform();
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace tkrr
