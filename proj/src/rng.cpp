#include "chaoskit/rng.hpp"

#include <cmath>
#include <numbers>

namespace chaoskit {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& ctr,
                         const std::array<std::uint32_t, 2>& key) noexcept {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
  const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const auto lo0 = static_cast<std::uint32_t>(p0);
  const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const auto lo1 = static_cast<std::uint32_t>(p1);
  ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

inline double to_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept {
  philox_round(counter, key);
  for (int r = 1; r < 10; ++r) {
    key[0] += kWeyl0;
    key[1] += kWeyl1;
    philox_round(counter, key);
  }
  return counter;
}

std::array<std::uint32_t, 4> CounterRng::block(std::uint32_t particle, std::uint32_t step,
                                               std::uint32_t index) const noexcept {
  const std::array<std::uint32_t, 4> ctr{
      particle, step, key_.replica,
      (static_cast<std::uint32_t>(key_.role) << 16) | (index & 0x7FFFu)};
  const std::array<std::uint32_t, 2> k{static_cast<std::uint32_t>(key_.seed),
                                       static_cast<std::uint32_t>(key_.seed >> 32)};
  return philox4x32(ctr, k);
}

std::pair<double, double> CounterRng::uniform_pair(std::uint32_t particle, std::uint32_t step,
                                                   std::uint32_t index) const noexcept {
  const auto w = block(particle, step, index);
  return {to_unit(w[0], w[1]), to_unit(w[2], w[3])};
}

std::pair<double, double> CounterRng::gaussian_pair(std::uint32_t particle, std::uint32_t step,
                                                    std::uint32_t index) const noexcept {
  const auto [u1, u2] = uniform_pair(particle, step, index);
  // 1 - u1 lies in (0, 1], keeping the logarithm finite.
  const double radius = std::sqrt(-2.0 * std::log(1.0 - u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

double CounterRng::gaussian(std::uint32_t particle, std::uint32_t step,
                            std::uint32_t c) const noexcept {
  const auto g = gaussian_pair(particle, step, c / 2);
  return (c % 2 == 0) ? g.first : g.second;
}

CounterEngine::result_type CounterEngine::operator()() noexcept {
  if (used_ == 4) {
    const std::array<std::uint32_t, 4> ctr{
        lane_, next_block_++, key_.replica,
        (static_cast<std::uint32_t>(key_.role) << 16) | 0x8000u | (tag_ & 0x7FFFu)};
    const std::array<std::uint32_t, 2> k{static_cast<std::uint32_t>(key_.seed),
                                         static_cast<std::uint32_t>(key_.seed >> 32)};
    buffer_ = philox4x32(ctr, k);
    used_ = 0;
  }
  return buffer_[used_++];
}

double CounterEngine::uniform01() noexcept {
  const std::uint32_t hi = (*this)();
  const std::uint32_t lo = (*this)();
  return to_unit(hi, lo);
}

}  // namespace chaoskit
