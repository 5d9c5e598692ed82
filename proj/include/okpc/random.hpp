#pragma once

#include <cstdint>
#include <random>

namespace okpc {

/// Seeded generator with a portable mapping to doubles; std distributions
/// are implementation-defined, this is not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform on [-1, 1).
  double symmetric() { return 2.0 * uniform01() - 1.0; }
  /// +1 or -1 with equal probability.
  double rademacher() { return (engine_() >> 63) != 0 ? 1.0 : -1.0; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace okpc
