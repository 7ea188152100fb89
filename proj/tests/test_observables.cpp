#include "aseplab/clock.hpp"
#include "aseplab/couplings.hpp"
#include "aseplab/errors.hpp"
#include "aseplab/observables.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace aseplab;

TEST_CASE("closed-form current, speed and variance")
{
    const Params tasep = Params::make(1.0, 0.5);
    CHECK(mean_current_formula(tasep, 0.5, 0.0, 10.0) == doctest::Approx(2.5));
    CHECK(mean_current_formula(tasep, 0.5, 0.5, 10.0) == doctest::Approx(0.0));
    CHECK(mean_current_formula(tasep, 0.5, -0.35, 10.0) == doctest::Approx(2.5 + 0.5 * 3.0));
    CHECK(sigma_squared(tasep, 0.5, 0.5) == doctest::Approx(0.125));
    CHECK(sigma_squared(tasep, 0.5, 0.0) == 0.0);
    const Params p = Params::make(0.7, 0.3);
    CHECK(mean_displacement(p, 0.3, 50.0) == doctest::Approx(8.0));
    CHECK(sigma_squared(p, 0.3, 0.0) == doctest::Approx(0.21 * 0.16));
}

TEST_CASE("current reads the height at the observer column")
{
    const Window w = Window::centered(20);
    HeightState h = init_height(sample_bernoulli(w, 0.5, 2));
    ClockStream clock(2, w, Params::make(0.7, 0.5), 5.0);
    clock.run_until(5.0, [&](const ClockEvent &e) { h.apply(e.bond(w), e.dir); });
    CHECK(current(h, 0.0, 5.0) == h.height(0));
    CHECK(current(h, 1.9, 5.0) == h.height(9));
    CHECK(current(h, -1.9, 5.0) == h.height(-9));
    CHECK_THROWS_AS(current(h, 5.0, 5.0), ValidationError);
    CHECK_THROWS_AS(current(h, 0.0, -1.0), ValidationError);
}

TEST_CASE("identity estimators on synthetic samples")
{
    std::vector<double> J(200), Q(200), Qa(200);
    for (std::size_t i = 0; i < J.size(); ++i)
    {
        J[i] = 3.0;
        Q[i] = 7.0;
        Qa[i] = i % 2 == 0 ? 3.0 : 7.0;
    }
    const IdentityEstimate e = variance_identity_estimators(J, Q, Qa, 0.5, 5);
    CHECK(e.lhs.value == 0.0);
    CHECK(e.rhs.value == doctest::Approx(0.5));
    CHECK(e.rhs.se == 0.0);
    CHECK(e.rhsA.value == doctest::Approx(0.5));
    CHECK(e.meanQ.value == doctest::Approx(7.0));
    CHECK(e.meanQa.value == doctest::Approx(5.0));
    const std::vector<double> few(50, 1.0);
    CHECK_THROWS_AS(variance_identity_estimators(few, few, few, 0.5, 0), ValidationError);
    CHECK_THROWS_AS(off_characteristic_variance(J, 0.0), ValidationError);
}

TEST_CASE("two-point table sum rules")
{
    const Params p = Params::make(1.0, 0.5);
    CHECK(two_point_half_width(8.0) == 44);
    CHECK(two_point_half_width(0.0) == 20);
    std::vector<double> Q;
    for (int i = 0; i < 1000; ++i)
    {
        Q.push_back(static_cast<double>((i % 21) - 10));
    }
    Q[0] = 500.0;
    const TwoPointTable t = two_point_estimate(Q, 8.0, p, 0.5);
    CHECK(t.center == 0);
    CHECK(t.offsets.size() == 89);
    double sum = t.lowTail + t.highTail;
    for (double s : t.S)
    {
        sum += s;
    }
    CHECK(sum == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(t.mass.value == doctest::Approx(0.25));
    CHECK(t.highTail == doctest::Approx(0.25 / 1000.0));
    double mean = 0.0;
    for (double q : Q)
    {
        mean += q;
    }
    CHECK(t.firstMoment.value == doctest::Approx(0.25 * mean / 1000.0));

    std::ostringstream out;
    write_two_point_csv(out, std::vector<TwoPointTable>{t});
    CHECK(!out.str().empty());
}

TEST_CASE("diffusivity and normalized moments")
{
    const Params p = Params::make(1.0, 0.5);
    std::vector<double> Q;
    for (int i = 0; i < 1000; ++i)
    {
        Q.push_back(i % 2 == 0 ? 8.0 : -8.0);
    }
    const DiffusivityEstimate d = diffusivity(Q, 8.0, p, 0.5);
    CHECK(d.fromTable.value == doctest::Approx(8.0));
    CHECK(d.fromVariance.value == doctest::Approx(64.0 * 1000.0 / 999.0 / 8.0));
    CHECK(normalized_moment(Q, 8.0, p, 0.5, 1.0).value == doctest::Approx(2.0));
    CHECK(normalized_moment(Q, 8.0, p, 0.5, 2.0).value == doctest::Approx(4.0));
    CHECK_THROWS_AS(normalized_moment(Q, 8.0, p, 0.5, 3.0), ValidationError);
    CHECK_THROWS_AS(normalized_moment(Q, 8.0, p, 0.5, 0.5), ValidationError);

    std::vector<double> c(1000), o(1000);
    for (std::size_t i = 0; i < c.size(); ++i)
    {
        o[i] = i % 2 == 0 ? 1.0 : 0.0;
        c[i] = 10.0 + o[i];
    }
    CHECK(direct_two_point_mass(c, o).value == doctest::Approx(0.25 * 1000.0 / 999.0));
}

TEST_CASE("stationary current has the flux mean")
{
    const Params p = Params::make(0.7, 0.3);
    const double t = 20.0;
    const Window w = Window::centered(light_cone_half_width(0.0, t));
    std::vector<double> J;
    for (std::uint64_t r = 0; r < 400; ++r)
    {
        const std::uint64_t seed = derive_seed(8, r);
        HeightState h = init_height(sample_bernoulli(w, 0.3, seed));
        ClockStream clock(seed, w, p, t);
        clock.run_until(t, [&](const ClockEvent &e) { h.apply(e.bond(w), e.dir); });
        J.push_back(static_cast<double>(current(h, 0.0, t)));
    }
    const Estimate m = mean_estimate(J);
    CHECK(std::abs(m.value - mean_current_formula(p, 0.3, 0.0, t)) < 4.0 * m.se);
}
