#pragma once

#include <cstdint>
#include <random>

namespace spline_koopman {

/// Seeded uniform generator with a fully specified output sequence.
///
/// The engine is std::mt19937_64, whose sequence the standard pins down.
/// The standard distributions are implementation-defined, so reals are
/// produced explicitly: the top 53 bits of one engine draw, scaled by 2^-53,
/// give a double in [0, 1).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, bound) by rejection on the top bits.
  std::uint64_t below(std::uint64_t bound);

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace spline_koopman
