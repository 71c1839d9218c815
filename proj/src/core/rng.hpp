#pragma once

#include <cstdint>

namespace hydroschro {

// Philox4x32-10 counter-based generator. Streams are addressed by
// (seed, stream); replica r of a run uses stream r, which makes parallel
// replicas reproducible independently of scheduling.
class Philox {
 public:
  Philox(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  double next_unit();     // [0, 1), 53-bit
  double exponential();   // unit-rate
  double normal();        // standard, Box-Muller
  // integer in [0, n)
  std::uint64_t next_below(std::uint64_t n);

 private:
  void refill();
  std::uint32_t key_[2];
  std::uint64_t counter_ = 0;
  std::uint32_t block_[4];
  int pos_ = 4;
  bool have_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace hydroschro
