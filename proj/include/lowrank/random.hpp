#pragma once

#include <cstdint>

#include "lowrank/matrix.hpp"

namespace lowrank {

/// Deterministic random stream: xoshiro256++ seeded through splitmix64,
/// Gaussian draws via the Marsaglia polar method. The same seed yields a
/// bit-identical sequence on every run.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();

  /// Standard normal draw.
  double gaussian();

 private:
  std::uint64_t seed_;
  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// rows x cols matrix with i.i.d. N(0, variance) entries, filled column by
/// column.
Matrix gaussian_matrix(Index rows, Index cols, double variance, RandomSource& rng);

}  // namespace lowrank
