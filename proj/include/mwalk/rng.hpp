#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace mwalk {

// Counter-based stream built on Philox4x32-10 (Salmon et al., SC'11).
// A stream is keyed by (seed, stream index); draws are a pure function of
// (key, draw counter), so replicas can be assigned disjoint streams and the
// resulting sequences do not depend on scheduling or thread count.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream) noexcept
        : key0_(static_cast<std::uint32_t>(seed)),
          key1_(static_cast<std::uint32_t>(seed >> 32)),
          stream_(stream) {}

    std::uint64_t next_u64() noexcept {
        if (cache_pos_ >= 2) {
            refill();
        }
        return cache_[cache_pos_++];
    }

    // Uniform on [0,1) with 53 random bits.
    double next_double() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform on (0,1); safe as input to log/quantile transforms.
    double next_double_open() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller (second deviate cached).
    double next_normal() noexcept {
        if (have_normal_) {
            have_normal_ = false;
            return cached_normal_;
        }
        const double u1 = next_double_open();
        const double u2 = next_double();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        cached_normal_ = radius * std::sin(angle);
        have_normal_ = true;
        return radius * std::cos(angle);
    }

    // Uniform integer in [0, bound) by rejection (bound > 0).
    std::uint64_t next_below(std::uint64_t bound) noexcept {
        const std::uint64_t limit = bound * (~std::uint64_t{0} / bound);
        std::uint64_t draw;
        do {
            draw = next_u64();
        } while (draw >= limit);
        return draw % bound;
    }

    std::uint64_t stream() const noexcept { return stream_; }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static void round(std::array<std::uint32_t, 4>& ctr, std::uint32_t k0,
                      std::uint32_t k1) noexcept {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
        const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
        const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
    }

    void refill() noexcept {
        std::array<std::uint32_t, 4> ctr = {
            static_cast<std::uint32_t>(block_),
            static_cast<std::uint32_t>(block_ >> 32),
            static_cast<std::uint32_t>(stream_),
            static_cast<std::uint32_t>(stream_ >> 32)};
        std::uint32_t k0 = key0_;
        std::uint32_t k1 = key1_;
        for (int i = 0; i < 10; ++i) {
            round(ctr, k0, k1);
            k0 += kWeyl0;
            k1 += kWeyl1;
        }
        cache_[0] = (static_cast<std::uint64_t>(ctr[0]) << 32) | ctr[1];
        cache_[1] = (static_cast<std::uint64_t>(ctr[2]) << 32) | ctr[3];
        cache_pos_ = 0;
        ++block_;
    }

    std::uint32_t key0_;
    std::uint32_t key1_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> cache_{};
    int cache_pos_ = 2;
    bool have_normal_ = false;
    double cached_normal_ = 0.0;
};

// Stream indices: replicas use [0, replicas); internal calibration and
// auxiliary draws live far away so they never collide with replica streams.
constexpr std::uint64_t kCalibrationStreamBase = 0x4000000000000000ull;
constexpr std::uint64_t kAuxStreamBase = 0x8000000000000000ull;

// Derives an independent sub-seed (splitmix64 finalizer), so calibration
// runs never share draws with the ensembles they calibrate.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
    std::uint64_t z = seed + tag * 0x9E3779B97F4A7C15ull + 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace mwalk
