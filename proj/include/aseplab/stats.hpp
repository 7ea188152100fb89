#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace aseplab
{
    /// Count, mean and centered second moment; merges are Chan's pairwise
    /// update, so partial results from any split of the data combine.
    struct Moments
    {
        std::uint64_t n = 0;
        double mean = 0.0;
        double m2 = 0.0;

        void add(double x) noexcept;
        Moments &merge(const Moments &other) noexcept;
        /// Unbiased sample variance (0 when n < 2).
        double variance() const noexcept;
        double se_mean() const noexcept;
    };

    /// Point estimate with standard error.
    struct Estimate
    {
        double value = 0.0;
        double se = 0.0;
    };

    using Statistic = std::function<double(std::span<const double>)>;

    /// Delete-one-batch jackknife over contiguous batches of the sample.
    /// `value` is the statistic on the full sample.
    Estimate batch_jackknife(std::span<const double> sample, const Statistic &statistic, std::size_t batches = 50);

    double sample_mean(std::span<const double> x);
    double sample_variance(std::span<const double> x);

    /// Mean with jackknife standard error.
    Estimate mean_estimate(std::span<const double> x, std::size_t batches = 50);
    /// Unbiased variance with jackknife standard error.
    Estimate variance_estimate(std::span<const double> x, std::size_t batches = 50);

    /// Sample covariance of paired data with jackknife standard error.
    Estimate covariance_estimate(std::span<const double> a, std::span<const double> b, std::size_t batches = 50);

    /// |a - b| <= k * sqrt(se_a^2 + se_b^2).
    bool agree(const Estimate &a, const Estimate &b, double k = 3.0);

    struct TestResult
    {
        double statistic = 0.0;
        double dof = 0.0;
        double pvalue = 1.0;
    };

    /// Pearson goodness of fit of `observed` counts against cell probabilities
    /// `expected` (summing to 1). Cells are pooled left to right until each has
    /// expected count >= minExpected.
    TestResult chi_square_gof(std::span<const double> observed, std::span<const double> expected,
                              double minExpected = 5.0);

    /// Pearson test of homogeneity between two count vectors on the same cells.
    TestResult chi_square_homogeneity(std::span<const double> a, std::span<const double> b, double minExpected = 5.0);

    /// Kolmogorov-Smirnov statistic of a sample against a continuous cdf and
    /// its asymptotic p-value with Stephens' small-sample correction.
    TestResult ks_test(std::vector<double> sample, const std::function<double(double)> &cdf);

    /// Survival function of the Kolmogorov distribution.
    double kolmogorov_survival(double lambda);

    /// Wilson score interval for k successes in n trials.
    struct Interval
    {
        double lo = 0.0;
        double hi = 0.0;
    };
    Interval wilson_interval(std::uint64_t k, std::uint64_t n, double z);

    /// Two-sided normal quantile z with P(|Z| > z) = alpha.
    double normal_two_sided(double alpha);

    /// Weighted least squares y = c0 + c1 x (+ c2 x^2 when quadratic).
    struct LinearFit
    {
        std::vector<double> coef;
        std::vector<double> se;
        double chi2 = 0.0;
        std::size_t dof = 0;
        std::vector<double> residuals;
    };
    LinearFit weighted_polyfit(std::span<const double> x, std::span<const double> y, std::span<const double> w,
                               int degree);
} // namespace aseplab
