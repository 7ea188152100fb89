#include "aseplab/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace aseplab;

TEST_CASE("philox4x32-10 known answers")
{
    CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("derived seeds are distinct and reproducible")
{
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 100000; ++i)
    {
        seen.insert(derive_seed(7, i));
    }
    CHECK(seen.size() == 100000);
    CHECK(derive_seed(7, 3) == derive_seed(7, 3));
    CHECK(derive_seed(7, 3) != derive_seed(8, 3));
}

TEST_CASE("counter draws are pure functions of seed, tag, site and index")
{
    const CounterRng a(42, StreamTag::Clock);
    const CounterRng b(42, StreamTag::Clock);
    const CounterRng c(42, StreamTag::Initial);
    CHECK(a.uniform(-5, 9) == b.uniform(-5, 9));
    CHECK(a.uniform(-5, 9) != c.uniform(-5, 9));
    CHECK(a.uniform(-5, 9) != a.uniform(-4, 9));
    CHECK(a.uniform(-5, 9) != a.uniform(-5, 10));
    for (std::int64_t s = -100; s < 100; ++s)
    {
        const UniformPair u = a.pair(s, 0);
        CHECK(u.first > 0.0);
        CHECK(u.first < 1.0);
        CHECK(u.second > 0.0);
        CHECK(u.second < 1.0);
    }
}

TEST_CASE("uniform streams have the right first two moments")
{
    const int n = 200000;
    Xoshiro256 x(3, StreamTag::Clock, 11);
    SequentialRng s(3, StreamTag::Aux, 11);
    double sx = 0.0, sxx = 0.0, ss = 0.0;
    for (int i = 0; i < n; ++i)
    {
        const double u = x.uniform();
        sx += u;
        sxx += u * u;
        ss += s.uniform();
    }
    const double se = std::sqrt(1.0 / 12.0 / n);
    CHECK(std::abs(sx / n - 0.5) < 5 * se);
    CHECK(std::abs(ss / n - 0.5) < 5 * se);
    CHECK(std::abs(sxx / n - 1.0 / 3.0) < 5 * std::sqrt(4.0 / 45.0 / n));
}

TEST_CASE("xoshiro substreams are reproducible and site keyed")
{
    Xoshiro256 a(9, StreamTag::Clock, 4);
    Xoshiro256 b(9, StreamTag::Clock, 4);
    Xoshiro256 c(9, StreamTag::Clock, 5);
    for (int i = 0; i < 100; ++i)
    {
        const auto va = a.next();
        CHECK(va == b.next());
        CHECK(va != c.next());
    }
}

TEST_CASE("sequential bernoulli frequency")
{
    SequentialRng r(5, StreamTag::Aux);
    const int n = 100000;
    int k = 0;
    for (int i = 0; i < n; ++i)
    {
        k += r.bernoulli(0.3) ? 1 : 0;
    }
    CHECK(std::abs(k / double(n) - 0.3) < 5 * std::sqrt(0.21 / n));
}
