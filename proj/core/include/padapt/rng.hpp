#pragma once

#include <array>
#include <cstdint>

#include "padapt/matrix.hpp"

namespace padapt {

// Deterministic pseudo-random generator: xoshiro256++ seeded via splitmix64.
// The algorithm is fixed here (not delegated to <random> distributions) so a
// seed reproduces the same draw sequence on every platform and toolchain.
//
//   uniform()  = (next_u64() >> 11) * 2^-53          in [0, 1)
//   normal()   = Box-Muller on two uniforms, pair-cached
class Rng {
public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64();

  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);   // [lo, hi)
  double normal();                        // standard normal
  // Uniform integer in [0, n), n >= 1.
  std::uint64_t uniform_int(std::uint64_t n);

  Matrix normal_matrix(std::size_t rows, std::size_t cols, double stddev = 1.0);
  Matrix uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi);

  // Derives an independent generator; used to give ablation cells and task
  // samples their own streams without coupling draw order.
  Rng fork(std::uint64_t stream) const;

private:
  std::uint64_t seed_ = 0;
  std::array<std::uint64_t, 4> state_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace padapt
