#pragma once

#include <array>
#include <cstdint>

namespace flowbench {

// Counter-based generator used by every synthetic-data generator, chosen so a
// fixed config reproduces bit-identical outputs on one platform and
// value-identical outputs (within 1e-12) across platforms and languages.
//
// Output contract:
//   - core block function: Threefry-2x64, 20 rounds, producing two 64-bit
//     words per block from key = (seed, stream) and counter = (block_index, 0);
//     words are consumed in order.
//   - uniform: u = (word >> 11 + 0.5) * 2^-53, strictly inside (0, 1).
//   - gaussian: inverse normal CDF of one uniform (rational approximation,
//     absolute error < 1e-15), so one word maps to one normal deviate.
//   - stream splitting: split(i) keeps the seed and derives the child stream
//     id as threefry((stream, i), (seed, 0xBE38143A3C0E5D2A))[0]; distinct
//     (stream, i) pairs give independent child streams.
std::array<std::uint64_t, 2> threefry2x64(const std::array<std::uint64_t, 2>& counter,
                                          const std::array<std::uint64_t, 2>& key);

// Inverse of the standard normal CDF on (0, 1).
double inverse_normal_cdf(double p);

class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  double next_uniform();   // (0, 1)
  double next_gaussian();  // N(0, 1)

  Rng split(std::uint64_t substream) const;

  std::uint64_t seed() const { return key_[0]; }
  std::uint64_t stream() const { return key_[1]; }

 private:
  std::array<std::uint64_t, 2> key_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> block_{};
  int block_pos_ = 2;  // 2 = exhausted, fetch next block
};

}  // namespace flowbench
