#pragma once

#include <array>
#include <cstdint>

#include "adjmc/normal.hpp"

namespace adjmc {

// Philox4x32-10 counter-based generator (Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3").  A block is a pure function of (counter,
// key), so any (path, step, factor) coordinate can be sampled independently
// of execution order.  That is what makes estimates bit-identical for any
// worker count: workers never share generator state.
struct Philox4x32 {
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(p0)};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }
};

// Uniform strictly inside (0, 1): 52 random bits centered on cell midpoints.
// Every value (2k + 1) * 2^-53 is exactly representable, so neither endpoint
// can be produced by rounding and the inverse CDF never sees 0 or 1.
inline double uniform_from_bits(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

// Deterministic Gaussian field over (path, step, factor), keyed by the run
// seed.  Factors are packed two per Philox block.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  double operator()(std::uint64_t path, std::uint64_t step, std::uint32_t factor) const {
    const std::array<std::uint32_t, 4> ctr = {static_cast<std::uint32_t>(path),
                                              static_cast<std::uint32_t>(path >> 32),
                                              static_cast<std::uint32_t>(step), factor >> 1};
    if (!cached_ || ctr != cached_ctr_) {
      cached_words_ = Philox4x32::block(ctr, key_);
      cached_ctr_ = ctr;
      cached_ = true;
    }
    const double u = (factor & 1u) ? uniform_from_bits(cached_words_[2], cached_words_[3])
                                   : uniform_from_bits(cached_words_[0], cached_words_[1]);
    return norm_inv_cdf(u);
  }

 private:
  std::array<std::uint32_t, 2> key_;
  // One-block cache: adjacent factors share a block, so the common d = 2 case
  // costs one Philox evaluation per step.  Copy the stream per worker; the
  // cache makes it stateful for speed only, never for the value produced.
  mutable std::array<std::uint32_t, 4> cached_ctr_{};
  mutable std::array<std::uint32_t, 4> cached_words_{};
  mutable bool cached_ = false;
};

}  // namespace adjmc
