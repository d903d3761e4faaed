// Deterministic per-stream random source.
//
// Every (master_seed, stream_index) pair owns an independent xoshiro256++
// state seeded through the splitmix64 finalizer, so sample i of a dataset can
// be generated on any thread, in any order, with identical output. Integer
// mixing only; no global state.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace bpde {

namespace detail {

// splitmix64 finalizer (Steele/Lea/Flood; Vigna's public-domain constants).
inline uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline uint64_t splitmix_next(uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    return mix64(state);
}

inline uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace detail

// Reserved stream-index ranges. Training data owns [0, N_train); everything
// else lives far above it so streams can never collide across roles.
namespace streams {
constexpr uint64_t kEvalBase = 1ull << 32;     // + condition_id * 2^20 + sample
constexpr uint64_t kCondexpBase = 1ull << 33;  // forcing at base, MC samples after
constexpr uint64_t kModelInit = 1ull << 34;
constexpr uint64_t kBatchOrder = (1ull << 34) + 1;
constexpr uint64_t kHoldoutBase = (1ull << 34) + (1ull << 16);
constexpr uint64_t kConditionStride = 1ull << 20;
}  // namespace streams

class SampleRng {
public:
    SampleRng(uint64_t master_seed, uint64_t stream_index)
        : master_seed_(master_seed), stream_index_(stream_index) {
        // Two chained finalizer rounds hash the (seed, stream) pair; a
        // splitmix64 run from that hash fills the xoshiro256++ state.
        uint64_t sm = detail::mix64(detail::mix64(master_seed ^ 0x9E3779B97F4A7C15ull) +
                                    stream_index);
        for (auto& w : s_) w = detail::splitmix_next(sm);
    }

    uint64_t master_seed() const { return master_seed_; }
    uint64_t stream_index() const { return stream_index_; }

    // xoshiro256++
    uint64_t next_u64() {
        const uint64_t result = detail::rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = detail::rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0,1), 53 random bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller; consumes two uniforms per pair and
    // caches the sine draw. The cache dies with the stream object, so odd
    // draw counts never leak across streams.
    double next_normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        // u1 in (0,1] keeps log finite.
        const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    // Uniform integer in [0, bound) via 128-bit multiply-shift.
    uint64_t next_below(uint64_t bound) {
        return static_cast<uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
    }

private:
    std::array<uint64_t, 4> s_{};
    uint64_t master_seed_ = 0;
    uint64_t stream_index_ = 0;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace bpde
