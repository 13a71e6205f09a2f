#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace spsnet {

using Rng = std::mt19937_64;

/// Counter-based SplitMix64 engine. Cheap to construct, so it is used where
/// a fresh stream is needed per grid cell or per trial (tie-breaking).
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    result_type operator()() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

using TieRng = SplitMix64;

/// SplitMix64 finalizer; used to derive independent substream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Stateless seed derivation: derive_seed(seed, {a, b, ...}) gives a stream
/// id that depends on every component and on their order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> parts) noexcept {
    std::uint64_t h = mix64(seed);
    for (std::uint64_t p : parts) h = mix64(h ^ mix64(p + 0x632BE59BD9B4E019ULL));
    return h;
}

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> parts = {}) {
    return Rng(derive_seed(seed, parts));
}

/// Stream tags keep the different consumers of one experiment seed apart.
enum class Stream : std::uint64_t {
    Topology = 1,
    Regressor = 2,
    Noise = 3,
    Signs = 4,
    Ties = 5,
    Root = 6,
    Trial = 7,
};

constexpr std::uint64_t tag(Stream s) noexcept { return static_cast<std::uint64_t>(s); }

/// Uniform double in [0, 1) from a 64-bit engine, independent of the
/// standard library's generate_canonical implementation.
template <class Engine>
double uniform01(Engine& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace spsnet
