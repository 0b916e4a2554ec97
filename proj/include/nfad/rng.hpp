#pragma once

#include <cstdint>
#include <utility>

#include "nfad/matrix.hpp"

namespace nfad {

// Deterministic generator: xoshiro256++ seeded through splitmix64.
// Fixed algorithm and constants, so a given (seed, stream) pair yields the
// same bit sequence on every platform. Distinct streams are independent
// generators derived from the same seed; stream ids are listed in
// pipeline.hpp so the stage commands can re-derive each other's draws.
//
// Never swap this for <random>: distribution implementations differ between
// standard libraries and would break the reproducibility contract.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  double uniform();      // [0, 1)
  double uniform_pos();  // (0, 1], safe as log() argument
  // N(0,1) via Box-Muller; produces pairs, the second value is cached and
  // returned by the next call.
  double normal();
  // Unbiased integer in [0, n) by rejection.
  int uniform_int(int n);

  // Fisher-Yates; std::shuffle is implementation-defined, ours is pinned.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      int j = uniform_int(i + 1);
      std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
    }
  }

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// n x d matrix of independent N(0,1) draws, filled row-major.
Mat sample_std_normal(int n, int d, Rng& rng);

}  // namespace nfad
