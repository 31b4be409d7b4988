#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace aes {

// Counter-based stream derivation: every random stream in the library is an
// std::mt19937_64 seeded from a hash of (seed, stream tag, counters...). Two
// streams with different keys are independent of evaluation order.

inline std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t stream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) noexcept {
    std::uint64_t h = mix64(seed);
    for (std::uint64_t c : counters) h = mix64(h ^ mix64(c + 0x632BE59BD9B4E019ull));
    return h;
}

inline std::mt19937_64 make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) {
    return std::mt19937_64(stream_key(seed, counters));
}

/// Stream tags, one per consumer, so that e.g. the shuffle stream of epoch 3
/// never coincides with the crop stream of sample 3.
enum class StreamTag : std::uint64_t {
    Init = 1,
    Shuffle = 2,
    Crop = 3,
    Bootstrap = 4,
    Synth = 5,
    Degrade = 6,
    LabelNoise = 7,
    GradCheck = 8,
    CorpusGrid = 9,
};

inline std::uint64_t tag(StreamTag t) noexcept { return static_cast<std::uint64_t>(t); }

/// Uniform double in [0, 1) from the top 53 bits; independent of the
/// standard library's distribution implementations.
inline double uniform01(std::mt19937_64& g) noexcept {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n) by rejection; n > 0.
inline std::uint64_t uniform_index(std::mt19937_64& g, std::uint64_t n) noexcept {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = g();
    } while (x >= limit);
    return x % n;
}

}  // namespace aes
