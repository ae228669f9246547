#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace ctbridge {

/// Philox-4x32-10 counter-based generator (Salmon et al., SC'11).
/// Stateless: every output block is a pure function of (counter, key).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter counter, Key key) noexcept;
};

/// Independent random streams are separated by a tag so that, e.g., bridge
/// noise and measurement noise never share counters under the same seed.
enum class StreamTag : std::uint32_t {
  bridge_noise = 1,
  measurement_noise = 2,
  phantom = 3,
  forward_sample = 4,
  test = 0xFFFF,
};

/// Reproducible stream of N(0, 1) or U[0, 1) variates addressed by
/// (seed, tag, trajectory, step, index). Two streams with the same address
/// always produce bitwise-identical values, independent of call order.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, StreamTag tag, std::uint32_t trajectory = 0,
               std::uint32_t step = 0) noexcept;

  // out[i] = normal variate number (offset + i) of this stream.
  void fill_normal(std::span<double> out, std::uint64_t offset = 0) const;
  // out[i] in [0, 1) with 53 random bits.
  void fill_uniform(std::span<double> out, std::uint64_t offset = 0) const;

  RandomStream with_step(std::uint32_t step) const noexcept;
  RandomStream with_trajectory(std::uint32_t trajectory) const noexcept;

 private:
  Philox4x32::Counter block_counter(std::uint64_t block) const noexcept;

  std::uint64_t seed_;
  StreamTag tag_;
  std::uint32_t trajectory_;
  std::uint32_t step_;
};

}  // namespace ctbridge
