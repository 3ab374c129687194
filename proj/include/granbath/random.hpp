#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include <boost/random/normal_distribution.hpp>

namespace granbath {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Child seed for stream `tag` under `parent`. Distinct tags give
/// statistically independent streams.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) noexcept
{
    return mix64(parent ^ mix64(tag ^ 0xD1B54A32D192ED03ULL));
}

// Well-known stream tags used when splitting a replica seed.
namespace stream_tag {
inline constexpr std::uint64_t init = 0;
inline constexpr std::uint64_t collision = 1;
inline constexpr std::uint64_t diffusion = 2;
inline constexpr std::uint64_t observe = 3;
}  // namespace stream_tag

/**
 * A reproducible random stream: a 64-bit Mersenne twister seeded from a
 * single 64-bit value, plus a ziggurat normal sampler.
 *
 * Streams are cheap to split, so every replica and every sub-step draws
 * from its own stream and results do not depend on scheduling.
 */
class RandomStream
{
public:
    using engine_type = std::mt19937_64;

    explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

    std::uint64_t seed() const noexcept { return seed_; }

    RandomStream split(std::uint64_t tag) const { return RandomStream(derive_seed(seed_, tag)); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n), n > 0.
    std::size_t index(std::size_t n)
    {
        __extension__ using u128 = unsigned __int128;
        const u128 prod = static_cast<u128>(engine_()) * n;
        return static_cast<std::size_t>(prod >> 64);
    }

    double normal() { return normal_(engine_); }

    engine_type& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    engine_type engine_;
    boost::random::normal_distribution<double> normal_;
};

}  // namespace granbath
