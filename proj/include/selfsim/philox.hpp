#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace selfsim {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A block of
/// four 32-bit words is a pure function of (key, counter), which makes every
/// path's randomness independent of how paths are scheduled.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  static Block generate(Block counter, std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{kMulA} * counter[0];
      const std::uint64_t p1 = std::uint64_t{kMulB} * counter[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      counter = {hi1 ^ counter[1] ^ key[0], lo1, hi0 ^ counter[3] ^ key[1], lo0};
      key[0] += kWeylA;
      key[1] += kWeylB;
    }
    return counter;
  }

 private:
  static constexpr std::uint32_t kMulA = 0xD2511F53;
  static constexpr std::uint32_t kMulB = 0xCD9E8D57;
  static constexpr std::uint32_t kWeylA = 0x9E3779B9;
  static constexpr std::uint32_t kWeylB = 0xBB67AE85;
};

/// Stream identifiers. Each (seed, path, stream) triple owns an independent
/// sequence of 2^32 Philox blocks.
enum class Stream : std::uint32_t {
  kPathNoise = 0,
  kTiltIndex = 1,
  kScan = 2,
};

/// Standard normal and uniform draws for one (seed, path, stream). Normals
/// come from Box-Muller on 53-bit uniforms, so the sequence is portable
/// across standard libraries (unlike std::normal_distribution).
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t path,
               Stream stream = Stream::kPathNoise)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        path_lo_(static_cast<std::uint32_t>(path)),
        path_hi_(static_cast<std::uint32_t>(path >> 32)),
        stream_(static_cast<std::uint32_t>(stream)) {}

  /// Uniform on (0, 1), never exactly 0 or 1.
  double uniform() {
    if (next_ == 2) refill();
    return buffer_[next_++];
  }

  double normal() {
    if (have_normal_) {
      have_normal_ = false;
      return pending_normal_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    pending_normal_ = radius * std::sin(angle);
    have_normal_ = true;
    return radius * std::cos(angle);
  }

 private:
  static double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (std::uint64_t{hi} << 21) | (lo >> 11);  // 53 bits
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  void refill() {
    const auto out =
        Philox4x32::generate({counter_++, stream_, path_lo_, path_hi_}, key_);
    buffer_ = {to_unit(out[0], out[1]), to_unit(out[2], out[3])};
    next_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint32_t path_lo_;
  std::uint32_t path_hi_;
  std::uint32_t stream_;
  std::uint32_t counter_ = 0;
  std::array<double, 2> buffer_{};
  int next_ = 2;
  double pending_normal_ = 0.0;
  bool have_normal_ = false;
};

}  // namespace selfsim
