#pragma once

#include <array>
#include <cstdint>

namespace aseplab
{
    /// Philox4x32-10 counter-based bijection (Salmon et al., Random123).
    using PhiloxCounter = std::array<std::uint32_t, 4>;
    using PhiloxKey = std::array<std::uint32_t, 2>;

    PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key) noexcept;

    /// SplitMix64 finalizer; used to derive independent 64-bit seeds.
    constexpr std::uint64_t mix64(std::uint64_t z) noexcept
    {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Seed of replica `index` under a master seed.
    constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept
    {
        return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
    }

    /// Substream purposes. Each (seed, site, purpose) triple addresses an
    /// independent stream of draws.
    enum class StreamTag : std::uint32_t
    {
        Clock = 0,
        Initial = 1,
        Marks = 2,
        MarkClock = 3,
        Priority = 4,
        Aux = 5,
    };

    /// Two uniforms in the open interval (0,1) with 53-bit resolution.
    struct UniformPair
    {
        double first;
        double second;
    };

    /// Stateless access to the stream addressed by (seed, site, tag).
    class CounterRng
    {
    public:
        constexpr CounterRng(std::uint64_t seed, StreamTag tag) noexcept
            : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
              tag_(static_cast<std::uint32_t>(tag))
        {
        }

        /// Draw number `index` of site `site`.
        UniformPair pair(std::int64_t site, std::uint64_t index) const noexcept;

        double uniform(std::int64_t site, std::uint64_t index) const noexcept
        {
            return pair(site, index).first;
        }

    private:
        PhiloxKey key_;
        std::uint32_t tag_;
    };

    /// xoshiro256+ (Blackman and Vigna) state seeded from the counter-based
    /// generator; one per clock slot so a site's draws never depend on others.
    class Xoshiro256
    {
    public:
        using result_type = std::uint64_t;

        Xoshiro256() = default;
        Xoshiro256(std::uint64_t seed, StreamTag tag, std::int64_t site) noexcept;

        std::uint64_t next() noexcept
        {
            const std::uint64_t result = s_[0] + s_[3];
            const std::uint64_t t = s_[1] << 17;
            s_[2] ^= s_[0];
            s_[3] ^= s_[1];
            s_[1] ^= s_[2];
            s_[0] ^= s_[3];
            s_[2] ^= t;
            s_[3] = (s_[3] << 45) | (s_[3] >> 19);
            return result;
        }

        /// Uniform in (0,1) from the top 53 bits.
        double uniform() noexcept { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

        result_type operator()() noexcept { return next(); }
        static constexpr result_type min() noexcept { return 0; }
        static constexpr result_type max() noexcept { return ~result_type{0}; }

    private:
        std::uint64_t s_[4] = {1, 2, 3, 4};
    };

    /// Sequential generator over one (seed, site, tag) stream. Satisfies
    /// UniformRandomBitGenerator so it can feed <algorithm> utilities.
    class SequentialRng
    {
    public:
        using result_type = std::uint64_t;

        SequentialRng(std::uint64_t seed, StreamTag tag, std::int64_t site = 0) noexcept
            : rng_(seed, tag), site_(site)
        {
        }

        double uniform() noexcept;

        /// Bernoulli draw with success probability `prob`.
        bool bernoulli(double prob) noexcept { return uniform() < prob; }

        result_type operator()() noexcept;
        static constexpr result_type min() noexcept { return 0; }
        static constexpr result_type max() noexcept { return ~result_type{0}; }

    private:
        CounterRng rng_;
        std::int64_t site_;
        std::uint64_t index_ = 0;
        bool haveSpare_ = false;
        double spare_ = 0.0;
    };
} // namespace aseplab
