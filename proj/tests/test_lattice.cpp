#include "aseplab/errors.hpp"
#include "aseplab/lattice.hpp"
#include "aseplab/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace aseplab;

namespace
{
    Configuration from_string(const Window &w, const std::string &bits)
    {
        Configuration c(w);
        for (std::size_t i = 0; i < bits.size(); ++i)
        {
            c.set(w.lo + static_cast<std::int64_t>(i), bits[i] == '1');
        }
        return c;
    }
} // namespace

TEST_CASE("params validation")
{
    CHECK_NOTHROW(Params::make(0.7, 0.3));
    CHECK_NOTHROW(Params::make(1.0, 0.0));
    CHECK_THROWS_AS(Params::make(0.5, 0.3), ValidationError);
    CHECK_THROWS_AS(Params::make(0.3, 0.3), ValidationError);
    CHECK_THROWS_AS(Params::make(0.7, 1.2), ValidationError);
    CHECK_THROWS_AS(Params::make(0.7, 0.3, 0.4), ValidationError);
    Params bad;
    bad.p = 0.7;
    bad.q = 0.2;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("window validation and ring neighbours")
{
    CHECK_THROWS_AS(Window::make(3, 3), ValidationError);
    const Window r = Window::ring(5);
    CHECK(r.right_of(4) == 0);
    CHECK(r.bond_active(4));
    const Window f = Window::centered(3);
    CHECK(f.right_of(3) == 4);
    CHECK_FALSE(f.bond_active(3));
    CHECK(f.bond_active(-3));
    CHECK(light_cone_half_width(0.2, 100) == 20 + 300 + 50);
}

TEST_CASE("integer part toward zero")
{
    CHECK(int_toward_zero(2.7) == 2);
    CHECK(int_toward_zero(-2.7) == -2);
    CHECK(int_toward_zero(0.0) == 0);
    CHECK(int_toward_zero(0.08 * 50.0) == 4);
    CHECK(int_toward_zero(-0.08 * 50.0) == -4);
    CHECK(int_toward_zero(3.999) == 3);
    SequentialRng rng(1, StreamTag::Aux);
    for (int i = 0; i < 1000; ++i)
    {
        const double x = (rng.uniform() - 0.5) * 200.0;
        CHECK(int_toward_zero(-x) == -int_toward_zero(x));
    }
}

TEST_CASE("flux and characteristic speed")
{
    CHECK(flux(0.0, Params::make(0.7, 0.3)) == 0.0);
    CHECK(flux(0.5, Params::make(1.0, 0.5)) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(flux(0.3, Params::make(0.7, 0.3)) == doctest::Approx(0.084).epsilon(1e-14));
    CHECK(char_speed(0.5, Params::make(0.7, 0.5)) == 0.0);
    CHECK(char_speed(0.0, Params::make(1.0, 0.0)) == 1.0);
    CHECK(char_speed(0.3, Params::make(0.7, 0.3)) == doctest::Approx(0.16).epsilon(1e-14));

    SequentialRng rng(2, StreamTag::Aux);
    const Params p = Params::make(0.8, 0.5);
    for (int i = 0; i < 20; ++i)
    {
        const double r = 0.01 + 0.98 * rng.uniform();
        const double h = 1e-5;
        const double fd = (flux(r + h, p) - flux(r - h, p)) / (2 * h);
        CHECK(std::abs(fd - char_speed(r, p)) < 1e-10);
    }
}

TEST_CASE("bernoulli initial configurations")
{
    const Window w = Window::make(0, 99999);
    const Configuration c = sample_bernoulli(w, 0.3, 17);
    const double mean = static_cast<double>(c.particle_count()) / static_cast<double>(w.size());
    CHECK(std::abs(mean - 0.3) < 3.0 * std::sqrt(0.21 / static_cast<double>(w.size())));
    CHECK(sample_bernoulli(w, 0.3, 17) == c);
    CHECK(sample_bernoulli(w, 1.0, 17).particle_count() == static_cast<std::int64_t>(w.size()));
    CHECK(sample_bernoulli(w, 0.0, 17).particle_count() == 0);

    // A site's value does not depend on the window around it.
    const Configuration small = sample_bernoulli(Window::make(100, 200), 0.3, 17);
    for (std::int64_t s = 100; s <= 200; ++s)
    {
        CHECK(small[s] == c[s]);
    }
}

TEST_CASE("initial height examples")
{
    const Window w = Window::centered(4);
    const HeightState empty = init_height(Configuration(w));
    for (std::int64_t x = w.lo; x < w.hi; ++x)
    {
        CHECK(empty.height(x) == 0);
    }

    Configuration c(w);
    c.set(-1, true);
    c.set(1, true);
    const HeightState h = init_height(c);
    CHECK(h.height(-1) == 0);
    CHECK(h.height(0) == 0);
    CHECK(h.height(1) == -1);
    CHECK(h.height(-2) == 1);
    CHECK(h.height(3) == -1);

    const HeightState full = init_height(sample_bernoulli(w, 1.0, 1));
    for (std::int64_t x = w.lo; x < w.hi; ++x)
    {
        CHECK(full.height(x) == -x);
    }
    CHECK(full.gradient_ok());
}

TEST_CASE("local jump rules")
{
    const Window w = Window::make(0, 1);
    CHECK(local_jump(from_string(w, "10"), 0, Direction::Right) == from_string(w, "01"));
    CHECK(local_jump(from_string(w, "11"), 0, Direction::Right) == from_string(w, "11"));
    CHECK(local_jump(from_string(w, "01"), 0, Direction::Left) == from_string(w, "10"));
    CHECK(local_jump(from_string(w, "10"), 0, Direction::Left) == from_string(w, "10"));
    CHECK(local_jump(from_string(w, "00"), 0, Direction::Right) == from_string(w, "00"));
    CHECK_THROWS_AS(local_jump(from_string(w, "10"), 1, Direction::Right), ValidationError);
}

TEST_CASE("height and particle duality under random jumps")
{
    const Window w = Window::centered(20);
    HeightState h = init_height(sample_bernoulli(w, 0.5, 3));
    SequentialRng rng(4, StreamTag::Aux);
    const std::int64_t initialCount = h.config().particle_count();
    for (int step = 0; step < 20000; ++step)
    {
        const auto bond = w.lo + static_cast<std::int64_t>(rng.uniform() * static_cast<double>(w.size() - 1));
        const Direction dir = rng.uniform() < 0.7 ? Direction::Right : Direction::Left;
        const std::int64_t before = h.height(bond);
        const bool moved = h.apply(bond, dir);
        const std::int64_t after = h.height(bond);
        CHECK(after - before == (moved ? (dir == Direction::Right ? 1 : -1) : 0));
        if (step % 500 == 0)
        {
            REQUIRE(h.gradient_ok());
            for (std::int64_t x = w.lo; x < w.hi; ++x)
            {
                REQUIRE(h.height(x) == h.crossing_current(x));
            }
        }
    }
    CHECK(h.config().particle_count() == initialCount);
}

TEST_CASE("ring conservation")
{
    const Window w = Window::ring(7);
    Configuration c(w);
    c.set(0, true);
    c.set(3, true);
    c.set(6, true);
    SequentialRng rng(5, StreamTag::Aux);
    for (int step = 0; step < 10000; ++step)
    {
        const auto bond = static_cast<std::int64_t>(rng.uniform() * 7.0);
        apply_jump(c, bond, rng.uniform() < 0.6 ? Direction::Right : Direction::Left);
        REQUIRE(c.particle_count() == 3);
    }
    // The wrap bond moves particles between sites 6 and 0.
    Configuration d(w);
    d.set(6, true);
    CHECK(apply_jump(d, 6, Direction::Right));
    CHECK(d[0]);
    CHECK_FALSE(d[6]);
}

TEST_CASE("configuration counting and order")
{
    const Window w = Window::make(-70, 70);
    const Configuration a = sample_bernoulli(w, 0.4, 9);
    std::int64_t manual = 0;
    for (std::int64_t s = -65; s <= 66; ++s)
    {
        manual += a[s] ? 1 : 0;
    }
    CHECK(a.count(-65, 66) == manual);
    CHECK(a.count(-100, 100) == a.particle_count());
    CHECK(a.count(5, 4) == 0);
    Configuration b = a;
    b.set(0, true);
    CHECK(a.dominated_by(b));
    CHECK(a.differences(b) == (a[0] ? 0 : 1));
}

TEST_CASE("snapshot round trip keeps heights")
{
    const Window w = Window::centered(10);
    HeightState h = init_height(sample_bernoulli(w, 0.5, 8));
    h.apply(0, Direction::Right);
    h.apply(0, Direction::Left);
    h.apply(0, Direction::Right);
    std::stringstream ss;
    write_snapshot(ss, h);
    const HeightState back = read_snapshot(ss);
    CHECK(back.config() == h.config());
    for (std::int64_t x = w.lo; x < w.hi; ++x)
    {
        CHECK(back.height(x) == h.height(x));
        CHECK(back.crossing_current(x) == h.crossing_current(x));
    }
    std::stringstream broken("# window lo=0 hi=3 boundary=frozen anchor=0\nsite,occ\n0,1\n2,0\n");
    CHECK_THROWS_AS(read_snapshot(broken), ValidationError);
}
