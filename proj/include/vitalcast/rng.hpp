#pragma once

// Deterministic random-number streams. Every stochastic component of the
// library draws from a Stream keyed by (seed, stream id, substream id), so
// results are reproducible bit-for-bit regardless of evaluation order or
// thread count. No std::random distributions are used because their output
// is implementation-defined.

#include <cmath>
#include <cstdint>

namespace vitalcast::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Collapses (seed, a, b) into a stream state. Distinct ids give
// statistically independent streams.
inline std::uint64_t derive_state(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = seed;
    std::uint64_t h = splitmix64(s);
    s = h ^ (a * 0xD1342543DE82EF95ULL);
    h = splitmix64(s);
    s = h ^ (b * 0xAF251AF3B0F025B5ULL);
    return splitmix64(s);
}

class Stream {
public:
    explicit Stream(std::uint64_t seed) : state_(seed) {}
    Stream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t substream_id = 0)
        : state_(derive_state(seed, stream_id, substream_id)) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    // Inclusive integer range.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const double span = static_cast<double>(hi - lo + 1);
        auto k = static_cast<std::int64_t>(uniform() * span);
        if (k > hi - lo) k = hi - lo;
        return lo + k;
    }

    // Box-Muller, one value per call; draws two uniforms so the stream
    // position does not depend on caller history.
    double normal(double mean = 0.0, double sd = 1.0) {
        const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + sd * r * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::uint64_t state_;
};

// Substream salts used across the library.
inline constexpr std::uint64_t kSaltDemographics = 1;
inline constexpr std::uint64_t kSaltNoise = 2;
inline constexpr std::uint64_t kSaltEvents = 3;
inline constexpr std::uint64_t kSaltInit = 4;
inline constexpr std::uint64_t kSaltShuffle = 5;
inline constexpr std::uint64_t kSaltFolds = 6;

}  // namespace vitalcast::rng
