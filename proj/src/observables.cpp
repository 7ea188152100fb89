#include "aseplab/observables.hpp"

#include "aseplab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace aseplab
{
    std::int64_t current(const HeightState &state, double v, double t)
    {
        require(std::isfinite(t) && t >= 0.0, "current needs t >= 0");
        const std::int64_t x = int_toward_zero(v * t);
        const Window &w = state.config().window();
        require(x >= w.lo && x < w.hi, "observer outside window");
        const std::int64_t h = state.height(x);
        ensure(h == state.crossing_current(x), "height current disagrees with the crossing count");
        return h;
    }

    double mean_current_formula(const Params &params, double rho, double v, double t)
    {
        return t * flux(rho, params) - rho * static_cast<double>(int_toward_zero(v * t));
    }

    double sigma_squared(const Params &params, double rho, double v)
    {
        return rho * (1.0 - rho) * std::abs(char_speed(rho, params) - v);
    }

    double mean_displacement(const Params &params, double rho, double t)
    {
        return t * char_speed(rho, params);
    }

    namespace
    {
        void require_replicas(std::size_t n)
        {
            require(n >= 100, "estimators need at least 100 replicas");
        }

        std::vector<double> abs_offsets(std::span<const double> Q, double x)
        {
            std::vector<double> out(Q.size());
            std::transform(Q.begin(), Q.end(), out.begin(), [x](double q) { return std::abs(x - q); });
            return out;
        }

        Estimate scaled(Estimate e, double c)
        {
            return {e.value * c, e.se * std::abs(c)};
        }
    } // namespace

    IdentityEstimate variance_identity_estimators(std::span<const double> J, std::span<const double> Q,
                                                  std::span<const double> Qa, double rho, std::int64_t x)
    {
        require_replicas(J.size());
        require_replicas(Q.size());
        require_replicas(Qa.size());
        const double c = rho * (1.0 - rho);
        IdentityEstimate out;
        out.lhs = variance_estimate(J);
        const std::vector<double> dq = abs_offsets(Q, static_cast<double>(x));
        const std::vector<double> dqa = abs_offsets(Qa, static_cast<double>(x));
        out.rhs = scaled(mean_estimate(dq), c);
        out.rhsA = scaled(mean_estimate(dqa), c);
        out.meanQ = mean_estimate(Q);
        out.meanQa = mean_estimate(Qa);
        return out;
    }

    Estimate off_characteristic_variance(std::span<const double> J, double t)
    {
        require_replicas(J.size());
        require(t > 0.0, "variance per unit time needs t > 0");
        return scaled(variance_estimate(J), 1.0 / t);
    }

    std::int64_t two_point_half_width(double t)
    {
        require(std::isfinite(t) && t >= 0.0, "two-point support needs t >= 0");
        return static_cast<std::int64_t>(std::ceil(6.0 * std::pow(t, 2.0 / 3.0))) + 20;
    }

    TwoPointTable two_point_estimate(std::span<const double> Q, double t, const Params &params, double rho)
    {
        require_replicas(Q.size());
        const double c = rho * (1.0 - rho);
        const auto n = static_cast<double>(Q.size());
        TwoPointTable table;
        table.t = t;
        table.center = int_toward_zero(char_speed(rho, params) * t);
        const std::int64_t half = two_point_half_width(t);
        std::vector<double> counts(static_cast<std::size_t>(2 * half + 1), 0.0);
        double low = 0.0;
        double high = 0.0;
        for (double q : Q)
        {
            const auto off = static_cast<std::int64_t>(q) - table.center;
            if (off < -half)
            {
                low += 1.0;
            }
            else if (off > half)
            {
                high += 1.0;
            }
            else
            {
                counts[static_cast<std::size_t>(off + half)] += 1.0;
            }
        }
        for (std::int64_t off = -half; off <= half; ++off)
        {
            const double pr = counts[static_cast<std::size_t>(off + half)] / n;
            table.offsets.push_back(off);
            table.S.push_back(c * pr);
            table.S_se.push_back(c * std::sqrt(pr * (1.0 - pr) / n));
        }
        table.lowTail = c * low / n;
        table.highTail = c * high / n;

        // Sum rules, with every replica counted (boundary bins included).
        std::vector<double> ones(Q.size(), c);
        table.mass = mean_estimate(ones);
        table.firstMoment = scaled(mean_estimate(Q), c);
        return table;
    }

    Estimate direct_two_point_mass(std::span<const double> windowCount, std::span<const double> originOccupied)
    {
        require_replicas(windowCount.size());
        return covariance_estimate(windowCount, originOccupied);
    }

    DiffusivityEstimate diffusivity(std::span<const double> Q, double t, const Params &params, double rho)
    {
        require_replicas(Q.size());
        require(t > 0.0, "diffusivity needs t > 0");
        const double vt = char_speed(rho, params) * t;
        const TwoPointTable table = two_point_estimate(Q, t, params, rho);
        const std::int64_t half = two_point_half_width(t);
        // Table form: support bins at their offsets, tail bins at the support edge.
        const auto fromTable = [&](std::span<const double> q) {
            double s = 0.0;
            for (double x : q)
            {
                const auto off = std::clamp<std::int64_t>(static_cast<std::int64_t>(x) - table.center, -half - 1, half + 1);
                const double i = static_cast<double>(table.center + off);
                s += (i - vt) * (i - vt);
            }
            return s / static_cast<double>(q.size()) / t;
        };
        DiffusivityEstimate out;
        out.fromTable = batch_jackknife(Q, fromTable);
        out.fromVariance = scaled(variance_estimate(Q), 1.0 / t);
        return out;
    }

    Estimate normalized_moment(std::span<const double> Q, double t, const Params &params, double rho, double m)
    {
        require(m >= 1.0 && m < 3.0, "moment order must lie in [1,3)");
        require(t > 0.0, "normalized moment needs t > 0");
        require_replicas(Q.size());
        const auto x = static_cast<double>(int_toward_zero(char_speed(rho, params) * t));
        std::vector<double> v(Q.size());
        std::transform(Q.begin(), Q.end(), v.begin(), [&](double q) { return std::pow(std::abs(q - x), m); });
        return scaled(mean_estimate(v), 1.0 / std::pow(t, 2.0 * m / 3.0));
    }

    void write_current_csv(std::ostream &out, std::span<const CurrentRow> rows)
    {
        out << "t,v,J_mean,J_var,J_var_se\n";
        char buf[256];
        for (const CurrentRow &r : rows)
        {
            std::snprintf(buf, sizeof buf, "%.15g,%.15g,%.15g,%.15g,%.15g\n", r.t, r.v, r.mean, r.var.value, r.var.se);
            out << buf;
        }
    }

    void write_two_point_csv(std::ostream &out, std::span<const TwoPointTable> tables)
    {
        out << "t,offset,S,S_se\n";
        char buf[256];
        for (const TwoPointTable &tab : tables)
        {
            for (std::size_t i = 0; i < tab.offsets.size(); ++i)
            {
                std::snprintf(buf, sizeof buf, "%.15g,%lld,%.15g,%.15g\n", tab.t,
                              static_cast<long long>(tab.offsets[i]), tab.S[i], tab.S_se[i]);
                out << buf;
            }
        }
    }

    void write_diffusivity_csv(std::ostream &out, std::span<const DiffusivityRow> rows)
    {
        out << "t,D,D_se\n";
        char buf[128];
        for (const DiffusivityRow &r : rows)
        {
            std::snprintf(buf, sizeof buf, "%.15g,%.15g,%.15g\n", r.t, r.D.value, r.D.se);
            out << buf;
        }
    }
} // namespace aseplab
