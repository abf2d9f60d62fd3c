#pragma once

// Counter-based random numbers. Every draw is a pure function of
// (seed, role, replica, particle, step, block), so results never depend on
// how work is scheduled across threads, and two systems that must share
// Brownian increments simply use the same key.

#include <array>
#include <cstdint>
#include <limits>
#include <utility>

namespace chaoskit {

/// Philox4x32-10 block function (Salmon, Moraes, Dror, Shaw; SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

enum class StreamRole : std::uint16_t {
  Shared = 0,      // interacting system and reference copies
  Pilot = 1,
  Init = 2,
  PilotInit = 3,
  Subsample = 4,
  Projection = 5,
  Validation = 6,
  ProxyPilot = 7,
  ProxyPilotInit = 8,
};

struct StreamKey {
  std::uint64_t seed = 0;
  StreamRole role = StreamRole::Shared;
  std::uint32_t replica = 0;

  friend bool operator==(const StreamKey&, const StreamKey&) = default;
};

class CounterRng {
 public:
  explicit CounterRng(StreamKey key) noexcept : key_(key) {}

  /// `index` must stay below 0x8000.
  std::array<std::uint32_t, 4> block(std::uint32_t particle, std::uint32_t step,
                                     std::uint32_t index) const noexcept;

  /// Two uniforms in [0, 1) with 53 random bits each.
  std::pair<double, double> uniform_pair(std::uint32_t particle, std::uint32_t step,
                                         std::uint32_t index) const noexcept;

  /// Two independent standard normals via Box-Muller on one counter block.
  std::pair<double, double> gaussian_pair(std::uint32_t particle, std::uint32_t step,
                                          std::uint32_t index) const noexcept;

  /// Component `c` of a standard normal vector for (particle, step).
  double gaussian(std::uint32_t particle, std::uint32_t step, std::uint32_t c) const noexcept;

  const StreamKey& key() const noexcept { return key_; }

 private:
  StreamKey key_;
};

/// UniformRandomBitGenerator over one lane of a stream. Successive calls
/// walk a 32-bit block counter, so the sequence is still a pure function of
/// (key, lane, tag). Engine counters set bit 15 of the last counter word,
/// which CounterRng::block never does, so the two never overlap.
class CounterEngine {
 public:
  using result_type = std::uint32_t;

  CounterEngine(StreamKey key, std::uint32_t lane, std::uint16_t tag = 0) noexcept
      : key_(key), lane_(lane), tag_(tag) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  /// Uniform in [0, 1) using two words.
  double uniform01() noexcept;

 private:
  StreamKey key_;
  std::uint32_t lane_;
  std::uint16_t tag_;
  std::uint32_t next_block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

}  // namespace chaoskit
