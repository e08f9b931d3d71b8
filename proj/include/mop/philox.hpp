#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Every Monte
// Carlo sample owns the counter block (sample, block, stream), so any sample
// can be regenerated independently of how the sample range is partitioned.

#include <array>
#include <cstdint>

namespace mop::rng {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

namespace detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

constexpr void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(product);
  hi = static_cast<std::uint32_t>(product >> 32);
}

}  // namespace detail

constexpr PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t lo0 = 0, hi0 = 0, lo1 = 0, hi1 = 0;
    detail::mulhilo(detail::kPhiloxM0, ctr[0], lo0, hi0);
    detail::mulhilo(detail::kPhiloxM1, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += detail::kPhiloxW0;
    key[1] += detail::kPhiloxW1;
  }
  return ctr;
}

// 53-bit uniform in [0, 1) from two 32-bit words.
constexpr double to_unit_double(std::uint32_t a, std::uint32_t b) {
  return static_cast<double>((static_cast<std::uint64_t>(a >> 5) << 26) | (b >> 6)) * 0x1.0p-53;
}

// Uniform variates for one sample: key = seed, counter = (index lo, index hi,
// block, stream). Two doubles per Philox block.
class SampleStream {
 public:
  constexpr SampleStream(std::uint64_t seed, std::uint64_t index, std::uint32_t stream = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        index_(index),
        stream_(stream) {}

  constexpr double uniform() {
    if (cursor_ == 2) {
      const PhiloxCounter ctr{static_cast<std::uint32_t>(index_), static_cast<std::uint32_t>(index_ >> 32), block_++,
                              stream_};
      words_ = philox4x32_10(ctr, key_);
      cursor_ = 0;
    }
    const double u = to_unit_double(words_[2 * cursor_], words_[2 * cursor_ + 1]);
    ++cursor_;
    return u;
  }

  // Uniform on [lo, hi).
  constexpr double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  PhiloxKey key_;
  std::uint64_t index_;
  std::uint32_t stream_;
  std::uint32_t block_ = 0;
  PhiloxCounter words_{};
  int cursor_ = 2;
};

}  // namespace mop::rng
