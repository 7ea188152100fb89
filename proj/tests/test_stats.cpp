#include "aseplab/errors.hpp"
#include "aseplab/rng.hpp"
#include "aseplab/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace aseplab;

namespace
{
    std::vector<double> normals(std::uint64_t seed, std::size_t n)
    {
        SequentialRng rng(seed, StreamTag::Aux);
        std::vector<double> x(n);
        for (double &v : x)
        {
            v = std::sqrt(-2.0 * std::log(rng.uniform())) * std::cos(2.0 * M_PI * rng.uniform());
        }
        return x;
    }
} // namespace

TEST_CASE("moments merge in any split")
{
    const std::vector<double> x = normals(1, 1001);
    Moments all;
    for (double v : x)
    {
        all.add(v);
    }
    Moments a, b;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        (i < 317 ? a : b).add(x[i]);
    }
    a.merge(b);
    CHECK(a.n == all.n);
    CHECK(a.mean == doctest::Approx(all.mean).epsilon(1e-12));
    CHECK(a.variance() == doctest::Approx(all.variance()).epsilon(1e-12));
    CHECK(all.variance() == doctest::Approx(sample_variance(x)).epsilon(1e-12));
    Moments one;
    one.add(3.0);
    CHECK(one.variance() == 0.0);
}

TEST_CASE("jackknife error of the mean matches the textbook formula")
{
    const std::vector<double> x = normals(2, 20000);
    const Estimate m = mean_estimate(x);
    CHECK(m.value == doctest::Approx(sample_mean(x)).epsilon(1e-12));
    const double textbook = std::sqrt(sample_variance(x) / static_cast<double>(x.size()));
    CHECK(std::abs(m.se / textbook - 1.0) < 0.35);

    // Variance of a variance estimator from N(0,1) data is 2 / (n - 1).
    const Estimate v = variance_estimate(x);
    CHECK(std::abs(v.value - 1.0) < 4.0 * std::sqrt(2.0 / 20000.0));
    CHECK(std::abs(v.se / std::sqrt(2.0 / 20000.0) - 1.0) < 0.35);

    const std::vector<double> y(x.begin(), x.end());
    const Estimate c = covariance_estimate(x, y);
    CHECK(c.value == doctest::Approx(sample_variance(x)).epsilon(1e-12));
    CHECK_THROWS_AS(mean_estimate(std::vector<double>{1.0}), ValidationError);
    CHECK(mean_estimate(std::vector<double>(10, 1.0)).se == 0.0);
}

TEST_CASE("agreement within combined errors")
{
    CHECK(agree({1.0, 0.1}, {1.2, 0.1}));
    CHECK_FALSE(agree({1.0, 0.01}, {1.2, 0.01}));
}

TEST_CASE("chi-square goodness of fit")
{
    // Uniform die, 6000 rolls.
    SequentialRng rng(3, StreamTag::Aux);
    std::vector<double> counts(6, 0.0);
    for (int i = 0; i < 6000; ++i)
    {
        counts[static_cast<std::size_t>(rng.uniform() * 6.0)] += 1.0;
    }
    const std::vector<double> probs(6, 1.0 / 6.0);
    const TestResult ok = chi_square_gof(counts, probs);
    CHECK(ok.dof == 5.0);
    CHECK(ok.pvalue > 1e-3);

    const std::vector<double> loaded{1500, 900, 900, 900, 900, 900};
    CHECK(chi_square_gof(loaded, probs).pvalue < 1e-10);

    // Statistic 4 on one degree of freedom.
    const std::vector<double> obs{60, 40};
    const std::vector<double> half{0.5, 0.5};
    const TestResult t = chi_square_gof(obs, half);
    CHECK(t.statistic == doctest::Approx(4.0));
    CHECK(t.pvalue == doctest::Approx(0.0455002638).epsilon(1e-8));

    // Sparse cells are pooled until each expects at least 5.
    const std::vector<double> sparse{50, 30, 15, 3, 1, 1};
    const std::vector<double> geo{0.5, 0.3, 0.15, 0.03, 0.01, 0.01};
    CHECK(chi_square_gof(sparse, geo).dof < 5.0);
}

TEST_CASE("chi-square homogeneity")
{
    const std::vector<double> a{100, 200, 300};
    const std::vector<double> b{100, 200, 300};
    CHECK(chi_square_homogeneity(a, b).statistic == doctest::Approx(0.0));
    CHECK(chi_square_homogeneity(a, b).pvalue == doctest::Approx(1.0));
    const std::vector<double> c{300, 200, 100};
    CHECK(chi_square_homogeneity(a, c).pvalue < 1e-10);
}

TEST_CASE("Kolmogorov-Smirnov")
{
    CHECK(kolmogorov_survival(1.3581) == doctest::Approx(0.05).epsilon(1e-3));
    CHECK(kolmogorov_survival(0.0) == 1.0);
    SequentialRng rng(4, StreamTag::Aux);
    std::vector<double> u(5000);
    for (double &v : u)
    {
        v = rng.uniform();
    }
    CHECK(ks_test(u, [](double x) { return std::clamp(x, 0.0, 1.0); }).pvalue > 1e-3);
    std::vector<double> squared = u;
    for (double &v : squared)
    {
        v *= v;
    }
    CHECK(ks_test(squared, [](double x) { return std::clamp(x, 0.0, 1.0); }).pvalue < 1e-10);
}

TEST_CASE("intervals and quantiles")
{
    CHECK(normal_two_sided(0.05) == doctest::Approx(1.959963985).epsilon(1e-8));
    CHECK(normal_two_sided(1e-3) == doctest::Approx(3.290526731).epsilon(1e-8));
    const Interval w = wilson_interval(50, 100, 1.96);
    CHECK(w.lo == doctest::Approx(0.4038).epsilon(1e-3));
    CHECK(w.hi == doctest::Approx(0.5962).epsilon(1e-3));
    const Interval zero = wilson_interval(0, 100, 1.96);
    CHECK(zero.lo == 0.0);
    CHECK(zero.hi > 0.0);
}

TEST_CASE("weighted polynomial fit")
{
    std::vector<double> x, y, w;
    for (int i = 0; i < 10; ++i)
    {
        x.push_back(i);
        y.push_back(1.5 - 0.25 * i + 0.125 * i * i);
        w.push_back(1.0 + i);
    }
    const LinearFit quad = weighted_polyfit(x, y, w, 2);
    CHECK(quad.coef[0] == doctest::Approx(1.5).epsilon(1e-10));
    CHECK(quad.coef[1] == doctest::Approx(-0.25).epsilon(1e-10));
    CHECK(quad.coef[2] == doctest::Approx(0.125).epsilon(1e-10));
    CHECK(quad.chi2 < 1e-18);
    CHECK(quad.dof == 7);
    const LinearFit line = weighted_polyfit(x, y, w, 1);
    CHECK(line.chi2 > 0.0);
    CHECK(line.residuals.size() == 10);
    CHECK_THROWS_AS(weighted_polyfit(std::vector<double>{1, 2}, std::vector<double>{1, 2},
                                     std::vector<double>{1, 1}, 2),
                    ValidationError);
}
