#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace sparse_consist {

// Reproducible random stream used by every generator in the library.
//
// Algorithm "sc-rng v1":
//   * engine: std::mt19937_64, whose output sequence is fixed by the C++
//     standard, seeded through std::seed_seq (also fully specified) with the
//     four 32-bit words {seed.lo, seed.hi, stream.lo, stream.hi};
//   * uniform doubles: top 53 bits of one engine output times 2^-53, in [0,1);
//   * normals: Box-Muller, both variates of each pair are used;
//   * bounded integers: rejection sampling on the top bits (no modulo bias).
// None of the std::*_distribution classes are used, since their outputs are
// implementation-defined. Changing any of the above must bump kVersion.
class Rng {
 public:
  static constexpr int kVersion = 1;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double normal();
  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);
  // k distinct indices from [0, n), in draw order (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sparse_consist
