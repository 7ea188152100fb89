#include "aseplab/rng.hpp"

namespace aseplab
{
    namespace
    {
        constexpr std::uint32_t kMul0 = 0xD2511F53u;
        constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
        constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
        constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

        inline void round(PhiloxCounter &c, const PhiloxKey &k) noexcept
        {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        }

        // 53 random bits mapped to the open interval (0,1).
        inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) noexcept
        {
            const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
            return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
        }
    } // namespace

    PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key) noexcept
    {
        for (int r = 0; r < 10; ++r)
        {
            if (r > 0)
            {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            round(ctr, key);
        }
        return ctr;
    }

    UniformPair CounterRng::pair(std::int64_t site, std::uint64_t index) const noexcept
    {
        const PhiloxCounter ctr{static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                                static_cast<std::uint32_t>(site), tag_};
        const PhiloxCounter out = philox4x32(ctr, key_);
        return {to_open_unit(out[0], out[1]), to_open_unit(out[2], out[3])};
    }

    Xoshiro256::Xoshiro256(std::uint64_t seed, StreamTag tag, std::int64_t site) noexcept
    {
        const PhiloxKey key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
        const auto siteWord = static_cast<std::uint32_t>(site);
        const auto tagWord = static_cast<std::uint32_t>(tag) | 0x80000000u;
        const PhiloxCounter a = philox4x32({0, 0, siteWord, tagWord}, key);
        const PhiloxCounter b = philox4x32({1, 0, siteWord, tagWord}, key);
        s_[0] = (static_cast<std::uint64_t>(a[0]) << 32) | a[1];
        s_[1] = (static_cast<std::uint64_t>(a[2]) << 32) | a[3];
        s_[2] = (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
        s_[3] = (static_cast<std::uint64_t>(b[2]) << 32) | b[3];
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0)
        {
            s_[0] = 1;
        }
    }

    double SequentialRng::uniform() noexcept
    {
        if (haveSpare_)
        {
            haveSpare_ = false;
            return spare_;
        }
        const UniformPair u = rng_.pair(site_, index_++);
        spare_ = u.second;
        haveSpare_ = true;
        return u.first;
    }

    SequentialRng::result_type SequentialRng::operator()() noexcept
    {
        // 53 bits per uniform; spread to 64 by mixing two draws.
        const double a = uniform();
        const double b = uniform();
        return mix64(static_cast<std::uint64_t>(a * 0x1.0p53) ^ (static_cast<std::uint64_t>(b * 0x1.0p53) << 11));
    }
} // namespace aseplab
