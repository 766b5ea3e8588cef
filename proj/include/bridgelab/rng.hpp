#pragma once

// Counter-based random streams.
//
// Philox4x32-10 maps (key, counter) to four 32-bit words. A replicate stream
// is keyed by the master seed and counts blocks inside the replicate, so
// (master_seed, replicate_index) identifies a stream independently of the
// order in which replicates are evaluated.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace bridgelab::rng {

struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t replicate_index = 0;
};

using Block = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline Block philox4x32_10(Block ctr, Key key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

/// Standard normal variates for one replicate, generated two at a time by
/// Box-Muller from consecutive Philox blocks.
class NormalStream {
 public:
  explicit NormalStream(SeedSpec seed)
      : key_{static_cast<std::uint32_t>(seed.master_seed),
             static_cast<std::uint32_t>(seed.master_seed >> 32)},
        rep_lo_(static_cast<std::uint32_t>(seed.replicate_index)),
        rep_hi_(static_cast<std::uint32_t>(seed.replicate_index >> 32)) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const Block r = philox4x32_10(
        {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
         rep_lo_, rep_hi_},
        key_);
    ++block_;
    // 53-bit uniforms; u1 lies in (0, 1] so the logarithm is finite.
    const double u1 = 1.0 - to_unit(r[0], r[1]);
    const double u2 = to_unit(r[2], r[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  std::uint64_t blocks_used() const { return block_; }

 private:
  static double to_unit(std::uint32_t a, std::uint32_t b) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(a >> 5) << 26) | (b >> 6);
    return static_cast<double>(bits) * 0x1.0p-53;
  }

  Key key_;
  std::uint32_t rep_lo_, rep_hi_;
  std::uint64_t block_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace bridgelab::rng
