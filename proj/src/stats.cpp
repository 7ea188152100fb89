#include "aseplab/stats.hpp"

#include "aseplab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

namespace aseplab
{
    void Moments::add(double x) noexcept
    {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }

    Moments &Moments::merge(const Moments &o) noexcept
    {
        if (o.n == 0)
        {
            return *this;
        }
        if (n == 0)
        {
            *this = o;
            return *this;
        }
        const auto na = static_cast<double>(n);
        const auto nb = static_cast<double>(o.n);
        const double total = na + nb;
        const double d = o.mean - mean;
        mean = (na * mean + nb * o.mean) / total;
        m2 += o.m2 + d * d * na * nb / total;
        n += o.n;
        return *this;
    }

    double Moments::variance() const noexcept
    {
        return n < 2 ? 0.0 : m2 / static_cast<double>(n - 1);
    }

    double Moments::se_mean() const noexcept
    {
        return n < 2 ? 0.0 : std::sqrt(variance() / static_cast<double>(n));
    }

    double sample_mean(std::span<const double> x)
    {
        require(!x.empty(), "mean of an empty sample");
        Moments m;
        for (double v : x)
        {
            m.add(v);
        }
        return m.mean;
    }

    double sample_variance(std::span<const double> x)
    {
        require(x.size() >= 2, "variance needs at least two samples");
        Moments m;
        for (double v : x)
        {
            m.add(v);
        }
        return m.variance();
    }

    Estimate batch_jackknife(std::span<const double> sample, const Statistic &statistic, std::size_t batches)
    {
        require(sample.size() >= 2, "jackknife needs at least two samples");
        batches = std::clamp<std::size_t>(batches, 2, sample.size());
        const double full = statistic(sample);
        std::vector<double> rest;
        rest.reserve(sample.size());
        std::vector<double> leaveOut(batches);
        for (std::size_t b = 0; b < batches; ++b)
        {
            const std::size_t lo = b * sample.size() / batches;
            const std::size_t hi = (b + 1) * sample.size() / batches;
            rest.clear();
            rest.insert(rest.end(), sample.begin(), sample.begin() + static_cast<std::ptrdiff_t>(lo));
            rest.insert(rest.end(), sample.begin() + static_cast<std::ptrdiff_t>(hi), sample.end());
            leaveOut[b] = statistic(rest);
        }
        const double avg = std::accumulate(leaveOut.begin(), leaveOut.end(), 0.0) / static_cast<double>(batches);
        double ss = 0.0;
        for (double v : leaveOut)
        {
            ss += (v - avg) * (v - avg);
        }
        const auto g = static_cast<double>(batches);
        return {full, std::sqrt((g - 1.0) / g * ss)};
    }

    Estimate mean_estimate(std::span<const double> x, std::size_t batches)
    {
        return batch_jackknife(x, sample_mean, batches);
    }

    Estimate variance_estimate(std::span<const double> x, std::size_t batches)
    {
        return batch_jackknife(x, sample_variance, batches);
    }

    Estimate covariance_estimate(std::span<const double> a, std::span<const double> b, std::size_t batches)
    {
        require(a.size() == b.size() && a.size() >= 4, "covariance needs at least four paired samples");
        batches = std::clamp<std::size_t>(batches, 2, a.size() / 2);
        const auto cov = [](double n, double sa, double sb, double sab) {
            return (sab - sa * sb / n) / (n - 1.0);
        };
        // Center first to keep the raw sums well conditioned.
        const double ma = sample_mean(a);
        const double mb = sample_mean(b);
        std::vector<double> ba(batches, 0.0), bb(batches, 0.0), bab(batches, 0.0), bn(batches, 0.0);
        for (std::size_t g = 0; g < batches; ++g)
        {
            const std::size_t lo = g * a.size() / batches;
            const std::size_t hi = (g + 1) * a.size() / batches;
            for (std::size_t i = lo; i < hi; ++i)
            {
                const double x = a[i] - ma;
                const double y = b[i] - mb;
                ba[g] += x;
                bb[g] += y;
                bab[g] += x * y;
            }
            bn[g] = static_cast<double>(hi - lo);
        }
        const double n = static_cast<double>(a.size());
        const double sa = std::accumulate(ba.begin(), ba.end(), 0.0);
        const double sb = std::accumulate(bb.begin(), bb.end(), 0.0);
        const double sab = std::accumulate(bab.begin(), bab.end(), 0.0);
        std::vector<double> leaveOut(batches);
        for (std::size_t g = 0; g < batches; ++g)
        {
            leaveOut[g] = cov(n - bn[g], sa - ba[g], sb - bb[g], sab - bab[g]);
        }
        const double avg = std::accumulate(leaveOut.begin(), leaveOut.end(), 0.0) / static_cast<double>(batches);
        double ss = 0.0;
        for (double v : leaveOut)
        {
            ss += (v - avg) * (v - avg);
        }
        const auto g = static_cast<double>(batches);
        return {cov(n, sa, sb, sab), std::sqrt((g - 1.0) / g * ss)};
    }

    bool agree(const Estimate &a, const Estimate &b, double k)
    {
        return std::abs(a.value - b.value) <= k * std::hypot(a.se, b.se);
    }

    namespace
    {
        double chi_square_upper(double stat, double dof)
        {
            if (dof <= 0.0)
            {
                return 1.0;
            }
            return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), stat));
        }
    } // namespace

    TestResult chi_square_gof(std::span<const double> observed, std::span<const double> expected, double minExpected)
    {
        require(observed.size() == expected.size() && !observed.empty(), "chi-square cells must match");
        const double total = std::accumulate(observed.begin(), observed.end(), 0.0);
        require(total > 0.0, "chi-square needs observations");
        std::vector<double> obs;
        std::vector<double> exp;
        double o = 0.0;
        double e = 0.0;
        for (std::size_t i = 0; i < observed.size(); ++i)
        {
            o += observed[i];
            e += expected[i] * total;
            if (e >= minExpected)
            {
                obs.push_back(o);
                exp.push_back(e);
                o = 0.0;
                e = 0.0;
            }
        }
        if (e > 0.0 || o > 0.0)
        {
            if (exp.empty())
            {
                obs.push_back(o);
                exp.push_back(e);
            }
            else
            {
                obs.back() += o;
                exp.back() += e;
            }
        }
        TestResult r;
        for (std::size_t i = 0; i < obs.size(); ++i)
        {
            require(exp[i] > 0.0, "chi-square cell with zero expectation");
            r.statistic += (obs[i] - exp[i]) * (obs[i] - exp[i]) / exp[i];
        }
        r.dof = static_cast<double>(obs.size()) - 1.0;
        r.pvalue = chi_square_upper(r.statistic, r.dof);
        return r;
    }

    TestResult chi_square_homogeneity(std::span<const double> a, std::span<const double> b, double minExpected)
    {
        require(a.size() == b.size() && !a.empty(), "homogeneity cells must match");
        const double na = std::accumulate(a.begin(), a.end(), 0.0);
        const double nb = std::accumulate(b.begin(), b.end(), 0.0);
        require(na > 0.0 && nb > 0.0, "homogeneity test needs two nonempty samples");
        // Pool adjacent cells until both expected counts reach the threshold.
        std::vector<double> ca;
        std::vector<double> cb;
        double sa = 0.0;
        double sb = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
        {
            sa += a[i];
            sb += b[i];
            const double pooled = (sa + sb) / (na + nb);
            if (pooled * std::min(na, nb) >= minExpected)
            {
                ca.push_back(sa);
                cb.push_back(sb);
                sa = 0.0;
                sb = 0.0;
            }
        }
        if (sa > 0.0 || sb > 0.0)
        {
            if (ca.empty())
            {
                ca.push_back(sa);
                cb.push_back(sb);
            }
            else
            {
                ca.back() += sa;
                cb.back() += sb;
            }
        }
        TestResult r;
        for (std::size_t i = 0; i < ca.size(); ++i)
        {
            const double pooled = (ca[i] + cb[i]) / (na + nb);
            const double ea = pooled * na;
            const double eb = pooled * nb;
            r.statistic += (ca[i] - ea) * (ca[i] - ea) / ea + (cb[i] - eb) * (cb[i] - eb) / eb;
        }
        r.dof = static_cast<double>(ca.size()) - 1.0;
        r.pvalue = chi_square_upper(r.statistic, r.dof);
        return r;
    }

    double kolmogorov_survival(double lambda)
    {
        if (lambda <= 0.0)
        {
            return 1.0;
        }
        if (lambda < 0.2)
        {
            return 1.0;
        }
        double sum = 0.0;
        for (int k = 1; k <= 100; ++k)
        {
            const double term = std::exp(-2.0 * k * k * lambda * lambda);
            sum += (k % 2 == 1 ? term : -term);
            if (term < 1e-17)
            {
                break;
            }
        }
        return std::clamp(2.0 * sum, 0.0, 1.0);
    }

    TestResult ks_test(std::vector<double> sample, const std::function<double(double)> &cdf)
    {
        require(!sample.empty(), "KS test needs samples");
        std::sort(sample.begin(), sample.end());
        const auto n = static_cast<double>(sample.size());
        double d = 0.0;
        for (std::size_t i = 0; i < sample.size(); ++i)
        {
            const double f = cdf(sample[i]);
            d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
        }
        const double sn = std::sqrt(n);
        TestResult r;
        r.statistic = d;
        r.dof = n;
        r.pvalue = kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d);
        return r;
    }

    Interval wilson_interval(std::uint64_t k, std::uint64_t n, double z)
    {
        require(n > 0 && k <= n, "Wilson interval needs 0 <= k <= n, n > 0");
        const auto nn = static_cast<double>(n);
        const double phat = static_cast<double>(k) / nn;
        const double denom = 1.0 + z * z / nn;
        const double center = (phat + z * z / (2.0 * nn)) / denom;
        const double half = z * std::sqrt(phat * (1.0 - phat) / nn + z * z / (4.0 * nn * nn)) / denom;
        return {std::max(0.0, center - half), std::min(1.0, center + half)};
    }

    double normal_two_sided(double alpha)
    {
        require(alpha > 0.0 && alpha < 1.0, "significance level must lie in (0,1)");
        return boost::math::quantile(boost::math::complement(boost::math::normal(), alpha / 2.0));
    }

    LinearFit weighted_polyfit(std::span<const double> x, std::span<const double> y, std::span<const double> w,
                               int degree)
    {
        require(degree >= 1 && degree <= 3, "polynomial degree must be 1..3");
        require(x.size() == y.size() && x.size() == w.size(), "fit inputs must have equal length");
        const auto cols = static_cast<Eigen::Index>(degree + 1);
        const auto rows = static_cast<Eigen::Index>(x.size());
        require(rows > cols, "fit needs more points than coefficients");
        Eigen::MatrixXd A(rows, cols);
        Eigen::VectorXd b(rows);
        for (Eigen::Index i = 0; i < rows; ++i)
        {
            const auto iu = static_cast<std::size_t>(i);
            require(w[iu] > 0.0 && std::isfinite(w[iu]) && std::isfinite(x[iu]) && std::isfinite(y[iu]),
                    "fit inputs must be finite with positive weights");
            const double sw = std::sqrt(w[iu]);
            double p = 1.0;
            for (Eigen::Index j = 0; j < cols; ++j)
            {
                A(i, j) = sw * p;
                p *= x[iu];
            }
            b(i) = sw * y[iu];
        }
        const Eigen::MatrixXd normal = A.transpose() * A;
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
        require(ldlt.info() == Eigen::Success && ldlt.isPositive(), "degenerate fit design");
        const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(b);
        const Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(cols, cols));

        LinearFit fit;
        fit.dof = static_cast<std::size_t>(rows - cols);
        for (Eigen::Index j = 0; j < cols; ++j)
        {
            fit.coef.push_back(coef(j));
            fit.se.push_back(std::sqrt(std::max(0.0, cov(j, j))));
        }
        const Eigen::VectorXd r = b - A * coef;
        fit.chi2 = r.squaredNorm();
        for (Eigen::Index i = 0; i < rows; ++i)
        {
            fit.residuals.push_back(r(i) / std::sqrt(w[static_cast<std::size_t>(i)]));
        }
        return fit;
    }
} // namespace aseplab
