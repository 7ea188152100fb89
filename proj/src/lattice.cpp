#include "aseplab/lattice.hpp"

#include "aseplab/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace aseplab
{
    Params Params::make(double p, double rho, std::optional<double> lambda)
    {
        Params params;
        params.p = p;
        params.q = 1.0 - p;
        params.rho = rho;
        params.lambda = lambda;
        params.validate();
        return params;
    }

    void Params::validate() const
    {
        require(std::isfinite(p) && std::isfinite(q), "rates must be finite");
        require(p + q == 1.0, "rates must satisfy p + q = 1");
        require(q >= 0.0 && q < p && p <= 1.0, "rates must satisfy 0 <= q < p <= 1");
        require(rho >= 0.0 && rho <= 1.0, "density rho must lie in [0,1]");
        if (lambda)
        {
            require(*lambda >= 0.0 && *lambda <= 1.0, "density lambda must lie in [0,1]");
            require(*lambda <= rho, "densities must satisfy lambda <= rho");
        }
    }

    Window Window::make(std::int64_t lo, std::int64_t hi, Boundary boundary)
    {
        Window w{lo, hi, boundary};
        w.validate();
        return w;
    }

    Window Window::centered(std::int64_t halfWidth)
    {
        return make(-halfWidth, halfWidth, Boundary::Frozen);
    }

    Window Window::ring(std::int64_t n)
    {
        return make(0, n - 1, Boundary::Ring);
    }

    void Window::validate() const
    {
        require(lo < hi, "window needs lo < hi");
        constexpr std::int64_t limit = std::numeric_limits<std::int32_t>::max();
        require(lo > -limit && hi < limit, "window sites must fit in 32 bits");
    }

    std::int64_t light_cone_half_width(double v, double t)
    {
        require(std::isfinite(v) && std::isfinite(t) && t >= 0.0, "light cone needs finite v and t >= 0");
        return static_cast<std::int64_t>(std::ceil(std::abs(v) * t)) + static_cast<std::int64_t>(std::ceil(3.0 * t)) +
               50;
    }

    Configuration::Configuration(Window window) : window_(window), words_((window.size() + 63) / 64, 0)
    {
        window_.validate();
    }

    std::int64_t Configuration::count(std::int64_t a, std::int64_t b) const noexcept
    {
        a = std::max(a, window_.lo);
        b = std::min(b, window_.hi);
        if (a > b)
        {
            return 0;
        }
        const std::size_t i0 = window_.index(a);
        const std::size_t i1 = window_.index(b) + 1;
        std::int64_t total = 0;
        std::size_t i = i0;
        while (i < i1)
        {
            const std::size_t w = i >> 6;
            const std::size_t off = i & 63;
            const std::size_t take = std::min<std::size_t>(64 - off, i1 - i);
            std::uint64_t bits = words_[w] >> off;
            if (take < 64)
            {
                bits &= (std::uint64_t{1} << take) - 1;
            }
            total += std::popcount(bits);
            i += take;
        }
        return total;
    }

    std::int64_t Configuration::particle_count() const noexcept
    {
        std::int64_t total = 0;
        for (std::uint64_t w : words_)
        {
            total += std::popcount(w);
        }
        return total;
    }

    bool Configuration::dominated_by(const Configuration &other) const
    {
        require(window_ == other.window_, "configurations live on different windows");
        for (std::size_t i = 0; i < words_.size(); ++i)
        {
            if (words_[i] & ~other.words_[i])
            {
                return false;
            }
        }
        return true;
    }

    std::int64_t Configuration::differences(const Configuration &other) const
    {
        require(window_ == other.window_, "configurations live on different windows");
        std::int64_t total = 0;
        for (std::size_t i = 0; i < words_.size(); ++i)
        {
            total += std::popcount(words_[i] ^ other.words_[i]);
        }
        return total;
    }

    Configuration local_jump(const Configuration &config, std::int64_t bond, Direction dir)
    {
        require(config.window().bond_active(bond), "bond outside window");
        Configuration out = config;
        apply_jump(out, bond, dir);
        return out;
    }

    std::int64_t int_toward_zero(double x)
    {
        require(std::isfinite(x), "int_toward_zero needs a finite argument");
        // Values within relative 1e-9 of an integer snap to it.
        const double nearest = std::round(x);
        if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, std::abs(x)))
        {
            return static_cast<std::int64_t>(nearest);
        }
        return static_cast<std::int64_t>(std::trunc(x));
    }

    double flux(double rho, const Params &params)
    {
        require(rho >= 0.0 && rho <= 1.0, "density must lie in [0,1]");
        return params.drift() * rho * (1.0 - rho);
    }

    double char_speed(double rho, const Params &params)
    {
        require(rho >= 0.0 && rho <= 1.0, "density must lie in [0,1]");
        return params.drift() * (1.0 - 2.0 * rho);
    }

    Configuration sample_bernoulli(const Window &window, double rho, std::uint64_t seed)
    {
        require(rho >= 0.0 && rho <= 1.0, "density must lie in [0,1]");
        Configuration config(window);
        const CounterRng rng(seed, StreamTag::Initial);
        for (std::int64_t s = window.lo; s <= window.hi; ++s)
        {
            config.set(s, rng.uniform(s, 0) < rho);
        }
        return config;
    }

    HeightState::HeightState(Configuration config) : config_(std::move(config))
    {
        const Window &w = config_.window();
        require(w.boundary == Boundary::Frozen, "heights need a frozen window");
        require(w.lo <= 0 && w.hi >= 1, "height anchor column [0,1] must lie inside the window");
        initialAtOrBelowOrigin_ = config_.count(w.lo, 0);
    }

    std::int64_t HeightState::height(std::int64_t x) const
    {
        const Window &w = config_.window();
        require(x >= w.lo && x < w.hi, "column outside window");
        if (x > 0)
        {
            return anchor_ - config_.count(1, x);
        }
        if (x < 0)
        {
            return anchor_ + config_.count(x + 1, 0);
        }
        return anchor_;
    }

    std::int64_t HeightState::crossing_current(std::int64_t x) const
    {
        const Window &w = config_.window();
        require(x >= w.lo && x < w.hi, "observer outside window");
        // Particles keep their order, so those ranked <= P0 (started at or
        // left of 0) that are right of x number max(0, P0 - A), and those
        // ranked > P0 now at or left of x number max(0, A - P0).
        const std::int64_t leftNow = config_.count(w.lo, x);
        const std::int64_t jPlus = std::max<std::int64_t>(0, initialAtOrBelowOrigin_ - leftNow);
        const std::int64_t jMinus = std::max<std::int64_t>(0, leftNow - initialAtOrBelowOrigin_);
        return jPlus - jMinus;
    }

    bool HeightState::gradient_ok() const
    {
        const Window &w = config_.window();
        std::int64_t prev = height(w.lo);
        for (std::int64_t i = w.lo + 1; i < w.hi; ++i)
        {
            const std::int64_t h = height(i);
            const std::int64_t step = prev - h;
            if (step < 0 || step > 1 || step != static_cast<std::int64_t>(config_.occupied(i)))
            {
                return false;
            }
            prev = h;
        }
        return true;
    }

    void HeightState::restore_anchor(std::int64_t anchor) noexcept
    {
        // h_0 is the net flow across [0,1], which fixes the initial count.
        anchor_ = anchor;
        initialAtOrBelowOrigin_ = config_.count(config_.window().lo, 0) + anchor;
    }

    HeightState init_height(const Configuration &config)
    {
        return HeightState(config);
    }

    void write_snapshot(std::ostream &out, const HeightState &state)
    {
        const Window &w = state.config().window();
        out << "# window lo=" << w.lo << " hi=" << w.hi << " boundary=frozen anchor=" << state.anchor() << '\n';
        out << "site,occ\n";
        for (std::int64_t s = w.lo; s <= w.hi; ++s)
        {
            out << s << ',' << (state.config().occupied(s) ? 1 : 0) << '\n';
        }
    }

    HeightState read_snapshot(std::istream &in)
    {
        std::string line;
        require(static_cast<bool>(std::getline(in, line)), "snapshot: missing header");
        std::int64_t lo = 0;
        std::int64_t hi = 0;
        std::int64_t anchor = 0;
        char boundary[32] = {};
        const int got = std::sscanf(line.c_str(), "# window lo=%ld hi=%ld boundary=%31s anchor=%ld", &lo, &hi,
                                    boundary, &anchor);
        require(got == 4 && std::string(boundary) == "frozen", "snapshot: malformed header");
        require(std::getline(in, line) && line == "site,occ", "snapshot: missing column header");
        Configuration config(Window::make(lo, hi));
        std::int64_t expected = lo;
        while (std::getline(in, line))
        {
            if (line.empty())
            {
                continue;
            }
            std::int64_t site = 0;
            int occ = 0;
            require(std::sscanf(line.c_str(), "%ld,%d", &site, &occ) == 2, "snapshot: malformed row");
            require(site == expected && (occ == 0 || occ == 1), "snapshot: rows out of order or non-binary");
            config.set(site, occ == 1);
            ++expected;
        }
        require(expected == hi + 1, "snapshot: missing sites");
        HeightState restored(std::move(config));
        restored.restore_anchor(anchor);
        return restored;
    }
} // namespace aseplab
