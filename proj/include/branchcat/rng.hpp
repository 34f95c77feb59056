#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace branchcat {

// Counter-based random streams (Philox-4x32, 10 rounds).
//
// Monte Carlo runs here must be bit-reproducible for a given master seed no
// matter how paths are distributed over worker threads. Stateful generators
// (mt19937 + per-thread seeding) cannot give that, so each path gets its own
// stream keyed by (seed, stream_id): the 64-bit seed is the Philox key and the
// stream id occupies the low half of the 128-bit counter, leaving 2^64 blocks
// (2^65 doubles) per path before any overlap. Output depends only on
// (seed, stream_id, position), never on thread scheduling.

namespace philox {

inline constexpr std::uint32_t M0 = 0xD2511F53u;
inline constexpr std::uint32_t M1 = 0xCD9E8D57u;
inline constexpr std::uint32_t W0 = 0x9E3779B9u;  // Weyl key schedule increments
inline constexpr std::uint32_t W1 = 0xBB67AE85u;

inline void round_once(std::array<std::uint32_t, 4>& c, const std::array<std::uint32_t, 2>& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

inline std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                          std::array<std::uint32_t, 2> key) {
    round_once(ctr, key);
    for (int r = 1; r < 10; ++r) {
        key[0] += W0;
        key[1] += W1;
        round_once(ctr, key);
    }
    return ctr;
}

}  // namespace philox

class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          base_{static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32)} {}

    std::uint32_t next_u32() {
        if (pos_ == 4) refill();
        return buf_[pos_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    // Uniform on (0, 1]: 53-bit mantissa, never exactly 0, so log() is safe.
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1p-53;
    }

    // Box-Muller pair; the sine leg is cached. Explicit formulas rather than
    // std::normal_distribution, whose output is implementation-defined.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 6.283185307179586476925286766559 * u2;
        spare_ = rad * std::sin(ang);
        have_spare_ = true;
        return rad * std::cos(ang);
    }

    double exponential() { return -std::log(uniform01()); }

  private:
    void refill() {
        buf_ = philox::block({base_[0], base_[1], ctr_lo_, ctr_hi_}, key_);
        if (++ctr_lo_ == 0) ++ctr_hi_;
        pos_ = 0;
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 2> base_;
    std::uint32_t ctr_lo_ = 0, ctr_hi_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 4;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace branchcat
