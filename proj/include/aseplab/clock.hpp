#pragma once

#include "aseplab/lattice.hpp"
#include "aseplab/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace aseplab
{
    /// Jump attempt from `site` to its right or left neighbour.
    struct ClockEvent
    {
        double time = 0.0;
        std::int64_t site = 0;
        Direction dir = Direction::Right;

        /// Left end of the bond the attempt acts on.
        std::int64_t bond(const Window &w) const noexcept
        {
            if (dir == Direction::Right)
            {
                return site;
            }
            return (w.boundary == Boundary::Ring && site == w.lo) ? w.hi : site - 1;
        }

        bool operator==(const ClockEvent &) const = default;
    };

    /// How per-site attempts are produced.
    enum class Generation
    {
        /// Rate-1 exponential clock per site plus a direction coin P(right) = p.
        Thinned,
        /// Independent rate-p right clock and rate-q left clock per site.
        Independent,
    };

    /// How per-site streams are merged into one time-ordered sequence.
    enum class Merge
    {
        /// Short time slabs hashed into buckets; same sequence as Heap, faster.
        Calendar,
        /// Binary min-heap keyed by (time, site, direction).
        Heap,
    };

    struct ClockOptions
    {
        Generation generation = Generation::Thinned;
        Merge merge = Merge::Calendar;
        StreamTag tag = StreamTag::Clock;
    };

    /// Slab entry of the calendar merge: time and (slot << 1 | direction).
    struct SlabEntry
    {
        double time;
        std::uint32_t key;
    };

    /// Poisson clocks of the graphical construction on one window.
    ///
    /// Site s draws from its own generator keyed by (seed, s, tag) only, so adding sites to
    /// the window leaves every other site's clock untouched. Attempts across a
    /// frozen boundary are drawn but never emitted.
    class ClockStream
    {
    public:
        static constexpr double kMaxHorizon = 0x1.0p40;

        ClockStream(std::uint64_t seed, Window window, Params params, double horizon, ClockOptions options = {});

        const Window &window() const noexcept { return window_; }
        const Params &params() const noexcept { return params_; }
        double horizon() const noexcept { return horizon_; }

        /// Next event in time order, or nullopt once time would pass the horizon.
        std::optional<ClockEvent> next_event();

        /// Time of the next event without consuming it, or nullopt if exhausted.
        std::optional<double> peek_time();

        /// Feeds every event with time <= t to `fn` in order.
        template <class Fn>
        void run_until(double t, Fn &&fn)
        {
            while (true)
            {
                if (!havePending_ && !advance())
                {
                    return;
                }
                if (pending_.time > t)
                {
                    return;
                }
                havePending_ = false;
                fn(pending_);
            }
        }

        std::uint64_t emitted() const noexcept { return emitted_; }

    private:
        bool advance();
        bool pop_heap(std::size_t &slot);
        void fill_slab();
        void draw_next(std::size_t slot);
        std::int64_t site_of(std::size_t slot) const noexcept
        {
            return window_.lo + static_cast<std::int64_t>(slot / perSite_);
        }
        bool emits(std::int64_t site, Direction dir) const noexcept;
        bool before(std::size_t a, std::size_t b) const noexcept;

        Window window_;
        Params params_;
        double horizon_;
        ClockOptions options_;
        std::size_t perSite_ = 1;

        // One slot per site (Thinned) or two per site (Independent: even right,
        // odd left).
        std::vector<double> nextTime_;
        std::vector<Direction> nextDir_;
        std::vector<Xoshiro256> streams_;

        // Calendar merge: events of the slab [slabEnd_ - slabWidth_, slabEnd_)
        // counting-sorted into time buckets, then insertion-sorted in place.
        double slabWidth_ = 2.0;
        double slabEnd_ = 0.0;
        std::vector<SlabEntry> slab_;
        std::vector<SlabEntry> sorted_;
        std::vector<std::uint32_t> slabBucket_;
        std::vector<std::uint32_t> bucketStart_;
        std::size_t cursor_ = 0;

        // Heap merge: slot indices ordered by (time, site, direction).
        std::vector<std::uint32_t> heap_;

        ClockEvent pending_{};
        bool havePending_ = false;
        bool exhausted_ = false;
        std::uint64_t emitted_ = 0;
    };

    /// Number of events matching (site, dir) with time in [from, to].
    std::int64_t count_events(ClockStream stream, std::int64_t site, Direction dir, double from, double to);

    /// CSV `time,site,dir` with 17 significant digits; dir is R or L.
    void write_event_log(std::ostream &out, ClockStream stream);
} // namespace aseplab
