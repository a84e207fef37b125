#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace wsrm {

/// Independent random streams. The numeric value is part of the stream key and
/// must never be renumbered, or previously recorded runs stop replaying.
enum class Stream : std::uint32_t {
  geometry = 1,
  assignment = 2,
  fading = 3,
  trial_seed = 4,
};

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The 64-bit seed is the Philox key. The 128-bit counter is laid out as
/// [block_lo, block_hi, stream, substream]; each (stream, substream) pair is
/// therefore a disjoint sequence of 2^64 blocks, which lets Monte-Carlo trials
/// and draw purposes be split without any shared state.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint32_t stream, std::uint32_t substream = 0) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  /// Raw bijection used by the generator; exposed for known-answer tests.
  static Block bijection(Block counter, Key key) noexcept;

 private:
  void refill() noexcept;

  Key key_;
  Block counter_;
  Block buffer_{};
  int used_ = 4;
};

Philox4x32 make_engine(std::uint64_t seed, Stream purpose, std::uint32_t substream = 0) noexcept;

/// Seed of Monte-Carlo trial `trial` derived from `base_seed`:
/// the first output of stream (trial_seed, trial) keyed by base_seed.
std::uint64_t trial_seed(std::uint64_t base_seed, std::uint32_t trial) noexcept;

}  // namespace wsrm
