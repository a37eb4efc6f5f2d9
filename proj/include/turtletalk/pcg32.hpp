#pragma once

#include <cstdint>

namespace turtletalk {

/// PCG32 (XSH RR 64/32). Seeding follows the reference `pcg32_srandom_r`
/// with the world seed as initstate and kStream as initseq, so seed 42
/// reproduces the reference demo stream.
class Pcg32 {
 public:
  static constexpr std::uint64_t kStream = 54;

  explicit Pcg32(std::uint64_t seed = 0, std::uint64_t stream = kStream) {
    state_ = 0;
    inc_ = (stream << 1u) | 1u;
    next_u32();
    state_ += seed;
    next_u32();
  }

  std::uint32_t next_u32() {
    const std::uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    const auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    const auto rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
  }

  /// Uniform in [0, 1) with 53 bits: two draws, high 27 and 26 bits.
  double next_double() {
    const std::uint64_t a = next_u32() >> 5u;
    const std::uint64_t b = next_u32() >> 6u;
    return static_cast<double>(a * 67108864ULL + b) / 9007199254740992.0;
  }

  std::uint64_t state() const { return state_; }
  std::uint64_t increment() const { return inc_; }

  friend bool operator==(const Pcg32&, const Pcg32&) = default;

 private:
  std::uint64_t state_;
  std::uint64_t inc_;
};

}  // namespace turtletalk
