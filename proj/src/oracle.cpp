#include "aseplab/oracle.hpp"

#include "aseplab/clock.hpp"
#include "aseplab/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace aseplab
{
    namespace
    {
        bool site_occupied(std::uint32_t state, int site, int n)
        {
            return (state >> (n - 1 - site)) & 1u;
        }

        std::uint32_t swap_sites(std::uint32_t state, int a, int b, int n)
        {
            const std::uint32_t mask = (1u << (n - 1 - a)) | (1u << (n - 1 - b));
            return state ^ mask;
        }

        double binomial(int n, int k)
        {
            if (k < 0 || k > n)
            {
                return 0.0;
            }
            return std::round(std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)));
        }
    } // namespace

    std::size_t combinadic_rank(std::uint32_t state, int n)
    {
        int ones = std::popcount(state);
        std::size_t rank = 0;
        for (int j = 0; j < n && ones > 0; ++j)
        {
            if (site_occupied(state, j, n))
            {
                // Strings sharing the prefix but with 0 here come first.
                rank += static_cast<std::size_t>(binomial(n - 1 - j, ones));
                --ones;
            }
        }
        return rank;
    }

    std::size_t GeneratorMatrix::index_of(std::uint32_t state) const
    {
        if (count)
        {
            require(std::popcount(state) == *count, "state outside the particle-count sector");
            return combinadic_rank(state, sites);
        }
        require(state < (1u << sites), "state outside the state space");
        return state;
    }

    std::string GeneratorMatrix::label(std::size_t index) const
    {
        std::string s;
        for (int j = 0; j < sites; ++j)
        {
            s.push_back(site_occupied(states.at(index), j, sites) ? '1' : '0');
        }
        return s;
    }

    GeneratorMatrix ring_generator(int sites, const Params &params, std::optional<int> count)
    {
        params.validate();
        require(sites >= 2 && sites <= 12, "ring generator supports 2 to 12 sites");
        require(!count || (*count >= 0 && *count <= sites), "particle count must lie in [0, N]");
        GeneratorMatrix g;
        g.sites = sites;
        g.count = count;
        for (std::uint32_t s = 0; s < (1u << sites); ++s)
        {
            if (!count || std::popcount(s) == *count)
            {
                g.states.push_back(s);
            }
        }
        const auto d = static_cast<Eigen::Index>(g.states.size());
        g.rates = Eigen::MatrixXd::Zero(d, d);
        for (Eigen::Index i = 0; i < d; ++i)
        {
            const std::uint32_t s = g.states[static_cast<std::size_t>(i)];
            for (int a = 0; a < sites; ++a)
            {
                const int b = (a + 1) % sites;
                const bool oa = site_occupied(s, a, sites);
                const bool ob = site_occupied(s, b, sites);
                if (oa == ob)
                {
                    continue;
                }
                const double rate = oa ? params.p : params.q;
                if (rate == 0.0)
                {
                    continue;
                }
                const auto j = static_cast<Eigen::Index>(g.index_of(swap_sites(s, a, b, sites)));
                g.rates(i, j) += rate;
                g.rates(i, i) -= rate;
            }
        }
        return g;
    }

    bool generator_valid(const GeneratorMatrix &g, double tol)
    {
        const Eigen::Index d = g.rates.rows();
        for (Eigen::Index i = 0; i < d; ++i)
        {
            if (std::abs(g.rates.row(i).sum()) > tol)
            {
                return false;
            }
            for (Eigen::Index j = 0; j < d; ++j)
            {
                if (i == j || g.rates(i, j) == 0.0)
                {
                    continue;
                }
                if (g.rates(i, j) < 0.0)
                {
                    return false;
                }
                const std::uint32_t diff = g.states[static_cast<std::size_t>(i)] ^ g.states[static_cast<std::size_t>(j)];
                if (std::popcount(diff) != 2)
                {
                    return false;
                }
                // The two differing sites must be ring neighbours.
                const int hiBit = 31 - std::countl_zero(diff);
                const int loBit = std::countr_zero(diff);
                if (hiBit - loBit != 1 && !(loBit == 0 && hiBit == g.sites - 1))
                {
                    return false;
                }
            }
        }
        return true;
    }

    double stationarity_check(const GeneratorMatrix &g, const Eigen::VectorXd &measure)
    {
        require(measure.size() == g.rates.rows(), "measure dimension does not match the generator");
        const Eigen::RowVectorXd r = measure.transpose() * g.rates;
        return r.cwiseAbs().maxCoeff();
    }

    Eigen::VectorXd uniform_measure(const GeneratorMatrix &g)
    {
        const auto d = static_cast<Eigen::Index>(g.dimension());
        return Eigen::VectorXd::Constant(d, 1.0 / static_cast<double>(d));
    }

    Eigen::VectorXd transient_distribution(const GeneratorMatrix &g, std::size_t initial, double t, double tol,
                                           std::size_t maxTerms)
    {
        require(std::isfinite(t) && t >= 0.0, "transient distribution needs t >= 0");
        require(initial < g.dimension(), "initial state out of range");
        require(tol > 0.0, "tolerance must be positive");
        const auto d = static_cast<Eigen::Index>(g.dimension());
        Eigen::VectorXd pi = Eigen::VectorXd::Zero(d);
        pi(static_cast<Eigen::Index>(initial)) = 1.0;
        const double lambda = g.rates.diagonal().cwiseAbs().maxCoeff();
        if (t == 0.0 || lambda == 0.0)
        {
            return pi;
        }
        // P = I + G / lambda is stochastic; p(t) = sum_k Poisson(k; lambda t) pi P^k.
        const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(d, d) + g.rates / lambda;
        const double mu = lambda * t;
        Eigen::RowVectorXd v = pi.transpose();
        Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(d);
        double mass = 0.0;
        for (std::size_t k = 0; k < maxTerms; ++k)
        {
            const auto kd = static_cast<double>(k);
            const double w = std::exp(-mu + kd * std::log(mu) - std::lgamma(kd + 1.0));
            out += w * v;
            mass += w;
            if (kd > mu && 1.0 - mass <= tol)
            {
                return out.transpose();
            }
            v = v * P;
        }
        throw ValidationError("uniformization did not reach the tolerance within the term cap");
    }

    double total_variation(const Eigen::VectorXd &a, const Eigen::VectorXd &b)
    {
        require(a.size() == b.size(), "distributions differ in dimension");
        return 0.5 * (a - b).cwiseAbs().sum();
    }

    BlockingMarginals blocking_marginals(const Params &params, std::int64_t K)
    {
        params.validate();
        require(params.q < params.p, "blocking measure needs q < p");
        require(K >= 1, "blocking chain needs K >= 1");
        BlockingMarginals m;
        m.K = K;
        const double r = params.ratio();
        for (std::int64_t n = -K; n <= K; ++n)
        {
            // P(1) = 1 / (1 + r^n), P(0) = r^n / (1 + r^n), written to avoid inf/inf.
            double one;
            double zero;
            if (r == 0.0)
            {
                one = n > 0 ? 1.0 : (n < 0 ? 0.0 : 0.5);
                zero = 1.0 - one;
            }
            else if (n >= 0)
            {
                const double rn = std::pow(r, static_cast<double>(n));
                one = 1.0 / (1.0 + rn);
                zero = rn / (1.0 + rn);
            }
            else
            {
                const double sn = std::pow(r, static_cast<double>(-n));
                one = sn / (1.0 + sn);
                zero = 1.0 / (1.0 + sn);
            }
            m.one.push_back(one);
            m.zero.push_back(zero);
        }
        return m;
    }

    double blocking_detailed_balance(const Params &params, const BlockingMarginals &m)
    {
        params.validate();
        const std::size_t size = m.one.size();
        require(size >= 2 && m.zero.size() == size, "blocking marginals malformed");
        std::vector<double> best(size);
        for (std::size_t i = 0; i < size; ++i)
        {
            best[i] = std::max(m.one[i], m.zero[i]);
        }
        // prefix[i] = prod best[0..i), suffix[i] = prod best[i..size).
        std::vector<double> prefix(size + 1, 1.0);
        std::vector<double> suffix(size + 1, 1.0);
        for (std::size_t i = 0; i < size; ++i)
        {
            prefix[i + 1] = prefix[i] * best[i];
            suffix[size - 1 - i] = suffix[size - i] * best[size - 1 - i];
        }
        double worst = 0.0;
        for (std::size_t i = 0; i + 1 < size; ++i)
        {
            // (1,0) -> (0,1) at rate p, reverse at rate q.
            const double forward = m.one[i] * m.zero[i + 1] * params.p;
            const double backward = m.zero[i] * m.one[i + 1] * params.q;
            worst = std::max(worst, std::abs(forward - backward) * prefix[i] * suffix[i + 2]);
        }
        return worst;
    }

    double blocking_detailed_balance(const Params &params, std::int64_t K)
    {
        return blocking_detailed_balance(params, blocking_marginals(params, K));
    }

    double blocking_detailed_balance_enumerated(const Params &params, const BlockingMarginals &m)
    {
        const std::size_t size = m.one.size();
        require(size >= 2 && size <= 20, "enumeration supports 2 to 20 labels");
        const auto prob = [&](std::uint32_t x) {
            double pr = 1.0;
            for (std::size_t i = 0; i < size; ++i)
            {
                pr *= ((x >> i) & 1u) ? m.one[i] : m.zero[i];
            }
            return pr;
        };
        double worst = 0.0;
        for (std::uint32_t x = 0; x < (1u << size); ++x)
        {
            for (std::size_t i = 0; i + 1 < size; ++i)
            {
                const bool a = (x >> i) & 1u;
                const bool b = (x >> (i + 1)) & 1u;
                if (!(a && !b))
                {
                    continue;
                }
                const std::uint32_t y = x ^ (3u << i);
                worst = std::max(worst, std::abs(prob(x) * params.p - prob(y) * params.q));
            }
        }
        return worst;
    }

    std::pair<double, double> change_of_measure_identity(double rho, double lambda, std::int64_t n)
    {
        require(rho > 0.0 && rho < 1.0, "change of measure needs 0 < rho < 1");
        require(lambda >= 0.0 && lambda <= rho, "change of measure needs 0 <= lambda <= rho");
        require(n >= 0, "change of measure needs n >= 0");
        // Term z: C(n,z) (lambda^2 / rho)^z ((1 - lambda)^2 / (1 - rho))^{n - z}.
        const double la = 2.0 * std::log(lambda) - std::log(rho);
        const double lb = 2.0 * std::log1p(-lambda) - std::log1p(-rho);
        std::vector<double> logs;
        const auto nd = static_cast<double>(n);
        for (std::int64_t z = 0; z <= n; ++z)
        {
            const auto zd = static_cast<double>(z);
            const double lc = std::lgamma(nd + 1.0) - std::lgamma(zd + 1.0) - std::lgamma(nd - zd + 1.0);
            const double term = lc + (z > 0 ? zd * la : 0.0) + (n - z > 0 ? (nd - zd) * lb : 0.0);
            logs.push_back(term);
        }
        const double top = *std::max_element(logs.begin(), logs.end());
        double s = 0.0;
        for (double l : logs)
        {
            s += std::exp(l - top);
        }
        const double lhs = std::exp(top + std::log(s));
        const double rhs = std::exp(nd * std::log1p((rho - lambda) * (rho - lambda) / (rho * (1.0 - rho))));
        return {lhs, rhs};
    }

    void write_distribution_csv(std::ostream &out, const GeneratorMatrix &g, const Eigen::VectorXd &p)
    {
        require(static_cast<std::size_t>(p.size()) == g.dimension(), "distribution dimension mismatch");
        out << "index,state,probability\n";
        char buf[128];
        for (std::size_t i = 0; i < g.dimension(); ++i)
        {
            std::snprintf(buf, sizeof buf, "%zu,%s,%.15g\n", i, g.label(i).c_str(), p(static_cast<Eigen::Index>(i)));
            out << buf;
        }
    }

    Eigen::VectorXd simulate_ring_distribution(const GeneratorMatrix &g, const Params &params, std::size_t initial,
                                               double t, std::uint64_t replicas, std::uint64_t seed)
    {
        require(replicas > 0, "simulation needs at least one replica");
        require(initial < g.dimension(), "initial state out of range");
        const Window window = Window::ring(g.sites);
        const std::uint32_t start = g.states[initial];
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.dimension()));
        for (std::uint64_t r = 0; r < replicas; ++r)
        {
            Configuration config(window);
            for (int j = 0; j < g.sites; ++j)
            {
                config.set(j, site_occupied(start, j, g.sites));
            }
            ClockStream clock(derive_seed(seed, r), window, params, t);
            clock.run_until(t, [&](const ClockEvent &e) { apply_jump(config, e.bond(window), e.dir); });
            std::uint32_t state = 0;
            for (int j = 0; j < g.sites; ++j)
            {
                state = (state << 1) | (config[j] ? 1u : 0u);
            }
            counts(static_cast<Eigen::Index>(g.index_of(state))) += 1.0;
        }
        return counts / static_cast<double>(replicas);
    }
} // namespace aseplab
