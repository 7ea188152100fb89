#pragma once

#include "aseplab/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace aseplab
{
    /// Jump rates and densities. q = 1 - p, and 0 <= q < p <= 1.
    struct Params
    {
        double p = 1.0;
        double q = 0.0;
        double rho = 0.5;
        std::optional<double> lambda;

        static Params make(double p, double rho, std::optional<double> lambda = std::nullopt);

        /// Throws ValidationError when an invariant fails.
        void validate() const;

        double drift() const noexcept { return p - q; }
        /// q/p, the ratio that drives the mark and priority laws.
        double ratio() const noexcept { return q / p; }
    };

    enum class Boundary
    {
        Frozen,
        Ring,
    };

    /// Sites lo..hi inclusive.
    struct Window
    {
        std::int64_t lo = 0;
        std::int64_t hi = 0;
        Boundary boundary = Boundary::Frozen;

        static Window make(std::int64_t lo, std::int64_t hi, Boundary boundary = Boundary::Frozen);
        /// [-halfWidth, halfWidth], frozen.
        static Window centered(std::int64_t halfWidth);
        /// Ring of n sites 0..n-1.
        static Window ring(std::int64_t n);

        void validate() const;

        std::size_t size() const noexcept { return static_cast<std::size_t>(hi - lo + 1); }
        bool contains(std::int64_t site) const noexcept { return site >= lo && site <= hi; }
        std::size_t index(std::int64_t site) const noexcept { return static_cast<std::size_t>(site - lo); }
        /// Right neighbour of `site`, wrapping in ring mode.
        std::int64_t right_of(std::int64_t site) const noexcept
        {
            return (boundary == Boundary::Ring && site == hi) ? lo : site + 1;
        }
        /// True when bond (site, right_of(site)) can carry jumps.
        bool bond_active(std::int64_t site) const noexcept
        {
            return boundary == Boundary::Ring ? contains(site) : (site >= lo && site < hi);
        }

        bool operator==(const Window &) const = default;
    };

    /// Half-width of a frozen window for an experiment of horizon t observed
    /// near site [vt]: ceil(|v| t) + ceil(3t) + 50.
    std::int64_t light_cone_half_width(double v, double t);

    enum class Direction : std::uint8_t
    {
        Right = 0,
        Left = 1,
    };

    /// Occupation variables over a window, one bit per site.
    class Configuration
    {
    public:
        Configuration() = default;
        explicit Configuration(Window window);

        const Window &window() const noexcept { return window_; }

        bool occupied(std::int64_t site) const noexcept
        {
            const std::size_t i = window_.index(site);
            return (words_[i >> 6] >> (i & 63)) & 1u;
        }
        bool operator[](std::int64_t site) const noexcept { return occupied(site); }

        void set(std::int64_t site, bool value) noexcept
        {
            const std::size_t i = window_.index(site);
            const std::uint64_t bit = std::uint64_t{1} << (i & 63);
            words_[i >> 6] = value ? (words_[i >> 6] | bit) : (words_[i >> 6] & ~bit);
        }

        /// Particles in [a, b] intersected with the window.
        std::int64_t count(std::int64_t a, std::int64_t b) const noexcept;
        std::int64_t particle_count() const noexcept;

        /// Sitewise this <= other.
        bool dominated_by(const Configuration &other) const;
        /// Number of sites where the two configurations differ.
        std::int64_t differences(const Configuration &other) const;

        bool operator==(const Configuration &) const = default;

    private:
        Window window_{};
        std::vector<std::uint64_t> words_;
    };

    /// Moves a particle across bond (bond, bond+1) in place. Right moves
    /// bond -> bond+1 when possible, Left moves bond+1 -> bond. Returns true if
    /// a particle moved; a blocked attempt is a no-op.
    inline bool apply_jump(Configuration &config, std::int64_t bond, Direction dir) noexcept
    {
        const std::int64_t right = config.window().right_of(bond);
        const bool a = config.occupied(bond);
        const bool b = config.occupied(right);
        if (a == b)
        {
            return false;
        }
        if ((dir == Direction::Right) != a)
        {
            return false;
        }
        config.set(bond, b);
        config.set(right, a);
        return true;
    }

    /// Value-returning form of apply_jump with bond validation.
    Configuration local_jump(const Configuration &config, std::int64_t bond, Direction dir);

    /// First integer from x towards the origin; x within relative 1e-9 of an
    /// integer counts as that integer.
    std::int64_t int_toward_zero(double x);

    /// (p - q) rho (1 - rho).
    double flux(double rho, const Params &params);
    /// (p - q)(1 - 2 rho), the derivative of flux.
    double char_speed(double rho, const Params &params);

    /// I.i.d. Bernoulli(rho) occupations; site s uses draw 0 of the
    /// (seed, s, Initial) stream, so the value at a site does not depend on
    /// the window around it.
    Configuration sample_bernoulli(const Window &window, double rho, std::uint64_t seed);

    /// Height function stored as the column height over [0,1] plus the
    /// configuration. Heights at other columns are reconstructed on demand.
    class HeightState
    {
    public:
        HeightState() = default;
        explicit HeightState(Configuration config);

        const Configuration &config() const noexcept { return config_; }
        std::int64_t anchor() const noexcept { return anchor_; }

        /// h_x, the column over [x, x+1].
        std::int64_t height(std::int64_t x) const;

        /// Applies one clock event. Returns true if a particle moved.
        bool apply(std::int64_t bond, Direction dir) noexcept
        {
            if (!apply_jump(config_, bond, dir))
            {
                return false;
            }
            if (bond == 0)
            {
                anchor_ += dir == Direction::Right ? 1 : -1;
            }
            return true;
        }

        /// J_+ - J_- across column x counted from particles' initial sides.
        std::int64_t crossing_current(std::int64_t x) const;

        /// 0 <= h_{i-1} - h_i <= 1 and omega_i = h_{i-1} - h_i everywhere.
        bool gradient_ok() const;

        /// Restores a snapshot taken at anchor height `anchor`.
        void restore_anchor(std::int64_t anchor) noexcept;

    private:
        Configuration config_;
        std::int64_t anchor_ = 0;
        std::int64_t initialAtOrBelowOrigin_ = 0;
    };

    /// h_0 = 0 and the three-branch initial formula.
    HeightState init_height(const Configuration &config);

    /// CSV snapshot: a `# window ...` header, then `site,occ` rows.
    void write_snapshot(std::ostream &out, const HeightState &state);
    HeightState read_snapshot(std::istream &in);
} // namespace aseplab
