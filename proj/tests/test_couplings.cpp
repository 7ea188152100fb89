#include "aseplab/couplings.hpp"
#include "aseplab/errors.hpp"
#include "aseplab/stats.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace aseplab;

TEST_CASE("mark law examples")
{
    const Params p = Params::make(0.7, 0.5);
    CHECK(mark_probability(0, p) == 0.5);
    CHECK(mark_probability(1, p) == doctest::Approx(0.7).epsilon(1e-14));
    CHECK(mark_probability(-1, p) == doctest::Approx(0.3).epsilon(1e-14));
    for (std::int64_t n = -40; n <= 40; ++n)
    {
        CHECK(mark_probability(n, p) + mark_probability(-n, p) == doctest::Approx(1.0).epsilon(1e-14));
    }
    const Params tasep = Params::make(1.0, 0.5);
    CHECK(mark_probability(0, tasep) == 0.5);
    CHECK(mark_probability(3, tasep) == 1.0);
    CHECK(mark_probability(-3, tasep) == 0.0);
}

TEST_CASE("mark truncation bounds the anomalous tail")
{
    CHECK(mark_truncation(Params::make(1.0, 0.5)) == 1);
    const Params p = Params::make(0.7, 0.5);
    const std::int64_t K = mark_truncation(p);
    CHECK(K == 34);
    const double r = p.ratio();
    // K is the first index with r^K <= eps (1 - r), which bounds each
    // anomalous tail sum_{n > K} r^n by eps.
    CHECK(std::pow(r, K) <= 1e-12 * (1.0 - r));
    CHECK(std::pow(r, K - 1) > 1e-12 * (1.0 - r));
    CHECK_THROWS_AS(mark_truncation(p, 0.0), ValidationError);
}

TEST_CASE("ordered pair law")
{
    const Window w = Window::make(0, 199999);
    const auto [eta, omega] = sample_mu_pair(w, 0.5, 0.2, 21);
    CHECK(eta.dominated_by(omega));
    CHECK(omega == sample_bernoulli(w, 0.5, 21));
    const double n = static_cast<double>(w.size());
    const double ones = static_cast<double>(eta.particle_count()) / n;
    const double mid = static_cast<double>(omega.particle_count() - eta.particle_count()) / n;
    CHECK(std::abs(ones - 0.2) < 4.0 * std::sqrt(0.2 * 0.8 / n));
    CHECK(std::abs(mid - 0.3) < 4.0 * std::sqrt(0.3 * 0.7 / n));
    CHECK_THROWS_AS(sample_mu_pair(w, 0.5, 0.6, 1), ValidationError);

    Configuration e(Window::make(-5, 10)), o(Window::make(-5, 10));
    o.set(1, true);
    o.set(2, true);
    o.set(4, true);
    e.set(4, true);
    CHECK(count_discrepancies(e, o, 0, 2) == 2);
    CHECK(count_discrepancies(e, o, 1, 1) == 1);
}

TEST_CASE("second class pair matches a generic two-member coupling")
{
    const Params p = Params::make(0.7, 0.4);
    const Window w = Window::centered(150);
    for (std::uint64_t seed = 1; seed <= 20; ++seed)
    {
        SecondClassPair pair(w, 0.4, seed);
        Configuration lower = sample_bernoulli(w, 0.4, seed);
        Configuration upper = lower;
        lower.set(0, false);
        upper.set(0, true);
        CHECK(pair.origin_occupied() == sample_bernoulli(w, 0.4, seed)[0]);
        CoupledEnsemble ens({HeightState(lower), HeightState(upper)}, {{0, 1}});

        ClockStream clock(seed, w, p, 30.0);
        clock.run_until(30.0, [&](const ClockEvent &e) {
            pair.step(e);
            ens.apply(e);
        });
        const Configuration &lo = ens.member(0).config();
        const Configuration &hi = ens.member(1).config();
        REQUIRE(lo.differences(hi) == 1);
        CHECK(!lo[pair.discrepancy()]);
        CHECK(hi[pair.discrepancy()]);
        CHECK(lo == pair.lower().config());
        for (std::int64_t x = -40; x <= 40; ++x)
        {
            CHECK(pair.lower_current(x) == ens.member(0).height(x));
            CHECK(pair.upper_current(x) == ens.member(1).height(x));
        }
    }
}

TEST_CASE("basic coupling preserves order")
{
    const Params p = Params::make(0.6, 0.5);
    const Window w = Window::centered(100);
    const auto [eta, omega] = sample_mu_pair(w, 0.5, 0.3, 4);
    CHECK_THROWS_AS(CoupledEnsemble({HeightState(omega), HeightState(eta)}, {{0, 1}}), ValidationError);
    CoupledEnsemble ens({HeightState(eta), HeightState(omega)}, {{0, 1}});
    ClockStream clock(4, w, p, 50.0);
    CHECK_NOTHROW(evolve_coupled(ens, clock, 50.0));
    CHECK(ens.member(0).config().dominated_by(ens.member(1).config()));
    CHECK_NOTHROW(ens.check_orderings());
}

TEST_CASE("five-process initial marks follow the blocking law")
{
    const Params p = Params::make(0.7, 0.5);
    FiveProcessOptions o;
    o.lambda = 0.4;
    const std::int64_t K = mark_truncation(p);
    const Window w = five_process_window(p, o.lambda, K, 0.0, 0.0);
    std::vector<double> ones(static_cast<std::size_t>(2 * K + 1), 0.0);
    const int replicas = 3000;
    for (int r = 0; r < replicas; ++r)
    {
        FiveProcess fp(w, p, o, derive_seed(31, static_cast<std::uint64_t>(r)));
        const auto marks = fp.marks();
        REQUIRE(marks.size() == ones.size());
        for (std::size_t i = 0; i < marks.size(); ++i)
        {
            ones[i] += marks[i];
        }
        CHECK(fp.audit().violations() == 0);
    }
    for (std::int64_t n = -3; n <= 3; ++n)
    {
        const double pr = mark_probability(n, p);
        const double freq = ones[static_cast<std::size_t>(n + K)] / replicas;
        CHECK(std::abs(freq - pr) < 4.0 * std::sqrt(pr * (1.0 - pr) / replicas));
    }
}

TEST_CASE("five-process conditioning")
{
    FiveProcessOptions o;
    o.lambda = 0.4;
    const Params p = Params::make(0.7, 0.5);
    const Window w = five_process_window(p, o.lambda, mark_truncation(p), 0.0, 10.0);
    o.conditioning = Conditioning::EventA;
    for (std::uint64_t s = 1; s <= 20; ++s)
    {
        FiveProcess fp(w, p, o, s);
        CHECK(fp.eventA());
        CHECK(fp.attempts() >= 1);
        ClockStream clock(s, w, p, 10.0);
        fp.run_until(10.0, clock, nullptr);
        CHECK(fp.audit().violations() == 0);
        CHECK(fp.Qa() <= fp.R());
    }
    o.conditioning = Conditioning::EventB;
    for (std::uint64_t s = 1; s <= 20; ++s)
    {
        FiveProcess fp(w, p, o, s);
        CHECK(fp.eventB());
        CHECK(fp.L() <= fp.Q());
    }
    const Params tasep = Params::make(1.0, 0.5);
    CHECK_THROWS_AS(FiveProcess(five_process_window(tasep, 0.4, 1, 0.0, 1.0), tasep, o, 1), ValidationError);
}

TEST_CASE("coupled and independent mark dynamics agree in law")
{
    const Params p = Params::make(0.7, 0.5);
    const double t = 5.0;
    const std::int64_t K = mark_truncation(p);
    const Window w = five_process_window(p, 0.4, K, 0.0, t);
    // Histogram of the number of ones among marks -2..2 at time t.
    const auto histogram = [&](MarkDynamics d, std::uint64_t master) {
        std::vector<double> h(6, 0.0);
        FiveProcessOptions o;
        o.lambda = 0.4;
        o.dynamics = d;
        for (std::uint64_t r = 0; r < 1500; ++r)
        {
            const std::uint64_t seed = derive_seed(master, r);
            FiveProcess fp(w, p, o, seed);
            ClockStream main(seed, w, p, t);
            ClockOptions mo;
            mo.tag = StreamTag::MarkClock;
            ClockStream marks(seed, w, p, t, mo);
            fp.run_until(t, main, d == MarkDynamics::IndependentClocks ? &marks : nullptr);
            const auto m = fp.marks();
            int ones = 0;
            for (std::int64_t k = -2; k <= 2; ++k)
            {
                ones += m[static_cast<std::size_t>(k + K)];
            }
            h[static_cast<std::size_t>(ones)] += 1.0;
        }
        return h;
    };
    const auto a = histogram(MarkDynamics::Coupled, 1);
    const auto b = histogram(MarkDynamics::IndependentClocks, 2);
    CHECK(chi_square_homogeneity(a, b).pvalue > 1e-3);
}

TEST_CASE("segment perturbation examples")
{
    const Params p = Params::make(0.7, 0.5);
    CHECK(priority_weight(0, p) == doctest::Approx(4.0 / 7.0).epsilon(1e-14));
    CHECK(priority_weight(1, p) == 0.0);
    double total = 0.0;
    for (std::int64_t k = 0; k >= -200; --k)
    {
        total += priority_weight(k, p);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

    // V^rho = 0 and V^lambda = 0.08 at rho = 0.5, lambda = 0.4.
    CHECK(segment_shift(p, 0.4, 0.0, 5) == 5);
    CHECK(segment_shift(p, 0.4, 50.0, 5) == 9);
    CHECK(segment_shift(p, 0.4, 312.6, 5) == 30);
    CHECK_THROWS_AS(segment_shift(p, 0.5, 1.0, 5), ValidationError);
    CHECK_THROWS_AS(segment_shift(p, 0.4, 1.0, 0), ValidationError);
}

TEST_CASE("segment priority label is geometric and claims hold")
{
    const Params p = Params::make(0.7, 0.5);
    SegmentOptions o;
    o.lambda = 0.4;
    o.t = 5.0;
    o.u = 5;
    const Window w = segment_window(p, o, 0.08, o.t);
    Moments N;
    AuditCounters audit;
    for (std::uint64_t r = 0; r < 3000; ++r)
    {
        const std::uint64_t seed = derive_seed(41, r);
        SegmentPerturbation seg(w, p, o, seed);
        ClockStream clock(seed, w, p, o.t);
        seg.run_until(o.t, clock);
        seg.check_currents(o.t, {0.0, 0.08});
        REQUIRE(seg.N() >= 0);
        N.add(static_cast<double>(seg.N()));
        audit += seg.audit();
    }
    CHECK(audit.violations() == 0);
    const double r = p.ratio();
    CHECK(std::abs(N.mean - r / (1.0 - r)) < 4.0 * N.se_mean());
}

TEST_CASE("particle-hole interchange with reflection maps Q at rho to -Q at 1 - rho")
{
    const Params p = Params::make(0.7, 0.3);
    const double t = 10.0;
    const Window w = Window::centered(light_cone_half_width(0.0, t));
    const auto positions = [&](double rho, double sign, std::uint64_t master) {
        std::vector<double> h(41, 0.0);
        for (std::uint64_t r = 0; r < 4000; ++r)
        {
            const std::uint64_t seed = derive_seed(master, r);
            SecondClassPair pair(w, rho, seed);
            ClockStream clock(seed, w, p, t);
            clock.run_until(t, [&](const ClockEvent &e) { pair.step(e); });
            const auto x = std::clamp<std::int64_t>(static_cast<std::int64_t>(sign) * pair.discrepancy(), -20, 20);
            h[static_cast<std::size_t>(x + 20)] += 1.0;
        }
        return h;
    };
    const auto a = positions(0.3, 1.0, 61);
    const auto b = positions(0.7, -1.0, 62);
    CHECK(chi_square_homogeneity(a, b).pvalue > 1e-3);
    // E Q = t (p - q)(1 - 2 rho) = 1.6 at rho = 0.3, so the laws are not symmetric about 0.
    CHECK(chi_square_homogeneity(a, positions(0.3, -1.0, 63)).pvalue < 1e-6);
}
