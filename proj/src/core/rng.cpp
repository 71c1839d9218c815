#include "core/rng.hpp"

#include <cmath>

namespace hydroschro {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::uint32_t c[4], const std::uint32_t k[2]) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * c[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * c[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  const std::uint32_t out0 = hi1 ^ c[1] ^ k[0];
  const std::uint32_t out1 = lo1;
  const std::uint32_t out2 = hi0 ^ c[3] ^ k[1];
  const std::uint32_t out3 = lo0;
  c[0] = out0;
  c[1] = out1;
  c[2] = out2;
  c[3] = out3;
}

}  // namespace

Philox::Philox(std::uint64_t seed, std::uint64_t stream) {
  // key mixes seed and stream so distinct streams are independent
  key_[0] = static_cast<std::uint32_t>(seed ^ (stream * 0x9E3779B97F4A7C15ull));
  key_[1] = static_cast<std::uint32_t>((seed >> 32) ^ (stream >> 32) ^ (stream << 7) ^
                                       0x85EBCA6Bu);
}

void Philox::refill() {
  std::uint32_t c[4] = {static_cast<std::uint32_t>(counter_),
                        static_cast<std::uint32_t>(counter_ >> 32), 0x2545F491u,
                        0x4F6CDD1Du};
  std::uint32_t k[2] = {key_[0], key_[1]};
  for (int r = 0; r < 10; ++r) {
    philox_round(c, k);
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  block_[0] = c[0];
  block_[1] = c[1];
  block_[2] = c[2];
  block_[3] = c[3];
  ++counter_;
  pos_ = 0;
}

std::uint32_t Philox::next_u32() {
  if (pos_ >= 4) refill();
  return block_[pos_++];
}

std::uint64_t Philox::next_u64() {
  const std::uint64_t hi = next_u32();
  return (hi << 32) | next_u32();
}

double Philox::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Philox::exponential() {
  // -log(1 - U) with U in [0, 1); log1p keeps small values accurate
  return -std::log1p(-next_unit());
}

double Philox::normal() {
  if (have_cached_normal_) {
    have_cached_normal_ = false;
    return cached_normal_;
  }
  double u1 = next_unit();
  while (u1 <= 0.0) u1 = next_unit();
  const double u2 = next_unit();
  const double r = std::sqrt(-2.0 * std::log(u1));
  cached_normal_ = r * std::sin(2.0 * M_PI * u2);
  have_cached_normal_ = true;
  return r * std::cos(2.0 * M_PI * u2);
}

std::uint64_t Philox::next_below(std::uint64_t n) {
  // rejection keeps the draw exactly uniform
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

}  // namespace hydroschro
