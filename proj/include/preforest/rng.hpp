#pragma once

// Reproducible pseudo-random streams. Every consumer (a tree, a candidate
// box, a coverage check) owns a stream keyed by (seed, stream_id); identical
// keys yield identical sequences on every platform and thread schedule.
// The generator is SplitMix64: counter state plus an avalanching finalizer.

#include <cstdint>
#include <stdexcept>

namespace preforest {

namespace rng_detail {

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

inline std::uint64_t combine(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ (mix64(b) + kGamma + (a << 6) + (a >> 2)));
}

} // namespace rng_detail

class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed),
          stream_id_(stream_id),
          state_(rng_detail::combine(rng_detail::mix64(seed + rng_detail::kGamma), stream_id)) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    std::uint64_t next_u64() {
        state_ += rng_detail::kGamma;
        return rng_detail::mix64(state_);
    }

    /// Uniform double in [0, 1) with full 53-bit mantissa resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + next_double() * (hi - lo); }

    /// Uniform integer in [0, bound), bias-free (Lemire rejection).
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("RngStream::next_below: bound must be positive");
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * bound;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < bound) {
            const std::uint64_t cutoff = (0 - bound) % bound;
            while (lo < cutoff) {
                m = static_cast<unsigned __int128>(next_u64()) * bound;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Child stream keyed by up to three labels. Independent of how much of
    /// this stream has been consumed.
    RngStream derive(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const {
        using rng_detail::combine;
        return RngStream(seed_, combine(combine(combine(stream_id_, a), b), c));
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t state_;
};

// Stream purpose tags: keeps independent phases of a run on disjoint streams.
namespace stream_tag {
constexpr std::uint64_t training = 0x7261696e01ULL;
constexpr std::uint64_t forest = 0x666f726573ULL;
constexpr std::uint64_t filter = 0x66696c7402ULL;
constexpr std::uint64_t coverage = 0x636f766572ULL;
constexpr std::uint64_t error = 0x6572726f72ULL;
constexpr std::uint64_t synthetic = 0x73796e7468ULL;
} // namespace stream_tag

} // namespace preforest
