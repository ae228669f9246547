#include "ctbridge/rng.hpp"

#include <cmath>
#include <numbers>

namespace ctbridge {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) noexcept {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// 53-bit uniform in [0, 1).
inline double to_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t bits =
      ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return static_cast<double>(bits) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter c, Key k) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

RandomStream::RandomStream(std::uint64_t seed, StreamTag tag,
                           std::uint32_t trajectory,
                           std::uint32_t step) noexcept
    : seed_(seed), tag_(tag), trajectory_(trajectory), step_(step) {}

RandomStream RandomStream::with_step(std::uint32_t step) const noexcept {
  return RandomStream(seed_, tag_, trajectory_, step);
}

RandomStream RandomStream::with_trajectory(
    std::uint32_t trajectory) const noexcept {
  return RandomStream(seed_, tag_, trajectory, step_);
}

Philox4x32::Counter RandomStream::block_counter(
    std::uint64_t block) const noexcept {
  // 32-bit block index; the upper half is folded into the tag word so very
  // long streams still get distinct counters.
  const auto lo = static_cast<std::uint32_t>(block);
  const auto hi = static_cast<std::uint32_t>(block >> 32);
  return {lo, step_, trajectory_, static_cast<std::uint32_t>(tag_) ^ (hi << 16)};
}

void RandomStream::fill_normal(std::span<double> out,
                               std::uint64_t offset) const {
  const Philox4x32::Key key{static_cast<std::uint32_t>(seed_),
                            static_cast<std::uint32_t>(seed_ >> 32)};
  constexpr double two_pi = 2.0 * std::numbers::pi;
  std::uint64_t i = 0;
  while (i < out.size()) {
    const std::uint64_t index = offset + i;
    const std::uint64_t block = index / 2;
    const auto r = Philox4x32::generate(block_counter(block), key);
    // Box-Muller; u1 in (0, 1] keeps the log finite.
    const double u1 = 1.0 - to_unit(r[0], r[1]);
    const double u2 = to_unit(r[2], r[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double z[2] = {radius * std::cos(two_pi * u2),
                         radius * std::sin(two_pi * u2)};
    for (std::uint64_t lane = index % 2; lane < 2 && i < out.size(); ++lane) {
      out[i++] = z[lane];
    }
  }
}

void RandomStream::fill_uniform(std::span<double> out,
                                std::uint64_t offset) const {
  const Philox4x32::Key key{static_cast<std::uint32_t>(seed_),
                            static_cast<std::uint32_t>(seed_ >> 32)};
  std::uint64_t i = 0;
  while (i < out.size()) {
    const std::uint64_t index = offset + i;
    const std::uint64_t block = index / 2;
    const auto r = Philox4x32::generate(block_counter(block), key);
    const double u[2] = {to_unit(r[0], r[1]), to_unit(r[2], r[3])};
    for (std::uint64_t lane = index % 2; lane < 2 && i < out.size(); ++lane) {
      out[i++] = u[lane];
    }
  }
}

}  // namespace ctbridge
