#include "aseplab/clock.hpp"

#include "aseplab/errors.hpp"

#include <boost/random/exponential_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace aseplab
{
    namespace
    {
        constexpr double kInf = std::numeric_limits<double>::infinity();

        bool entry_less(const SlabEntry &a, const SlabEntry &b) noexcept
        {
            return a.time < b.time || (a.time == b.time && a.key < b.key);
        }
    } // namespace

    ClockStream::ClockStream(std::uint64_t seed, Window window, Params params, double horizon, ClockOptions options)
        : window_(window), params_(params), horizon_(horizon), options_(options)
    {
        window_.validate();
        params_.validate();
        require(std::isfinite(horizon) && horizon >= 0.0, "clock horizon must be finite and nonnegative");
        require(horizon <= kMaxHorizon, "clock horizon exceeds 2^40");

        perSite_ = options_.generation == Generation::Independent ? 2 : 1;
        const std::size_t slots = window_.size() * perSite_;
        require(slots < (std::size_t{1} << 31), "window too large for the clock");
        nextTime_.assign(slots, 0.0);
        nextDir_.assign(slots, Direction::Right);
        streams_.resize(slots);
        for (std::size_t slot = 0; slot < slots; ++slot)
        {
            // Independent left clocks use a separate tag block.
            const auto tag = static_cast<StreamTag>(static_cast<std::uint32_t>(options_.tag) + 64u * (slot % perSite_));
            streams_[slot] = Xoshiro256(seed, tag, site_of(slot));
            draw_next(slot);
        }

        if (options_.merge == Merge::Heap)
        {
            heap_.resize(slots);
            for (std::size_t slot = 0; slot < slots; ++slot)
            {
                heap_[slot] = static_cast<std::uint32_t>(slot);
            }
            std::make_heap(heap_.begin(), heap_.end(), [this](std::uint32_t a, std::uint32_t b) { return before(b, a); });
            return;
        }

    }

    bool ClockStream::before(std::size_t a, std::size_t b) const noexcept
    {
        if (nextTime_[a] != nextTime_[b])
        {
            return nextTime_[a] < nextTime_[b];
        }
        const std::int64_t sa = site_of(a);
        const std::int64_t sb = site_of(b);
        if (sa != sb)
        {
            return sa < sb;
        }
        return nextDir_[a] < nextDir_[b];
    }

    void ClockStream::draw_next(std::size_t slot)
    {
        Xoshiro256 &g = streams_[slot];
        if (options_.generation == Generation::Thinned)
        {
            nextTime_[slot] += boost::random::exponential_distribution<double>()(g);
            nextDir_[slot] = (params_.q == 0.0 || g.uniform() < params_.p) ? Direction::Right : Direction::Left;
            return;
        }
        const bool right = (slot % 2) == 0;
        const double rate = right ? params_.p : params_.q;
        nextDir_[slot] = right ? Direction::Right : Direction::Left;
        nextTime_[slot] = rate > 0.0 ? nextTime_[slot] + boost::random::exponential_distribution<double>(rate)(g) : kInf;
    }

    bool ClockStream::emits(std::int64_t site, Direction dir) const noexcept
    {
        if (window_.boundary == Boundary::Ring)
        {
            return true;
        }
        return !((site == window_.lo && dir == Direction::Left) || (site == window_.hi && dir == Direction::Right));
    }

    void ClockStream::fill_slab()
    {
        const double slabStart = slabEnd_;
        if (slabStart > horizon_)
        {
            exhausted_ = true;
            return;
        }
        slabEnd_ = slabStart + slabWidth_;
        slab_.clear();
        const std::size_t slots = nextTime_.size();
        for (std::size_t slot = 0; slot < slots; ++slot)
        {
            while (nextTime_[slot] < slabEnd_ && nextTime_[slot] <= horizon_)
            {
                const std::int64_t site = site_of(slot);
                const Direction dir = nextDir_[slot];
                if (emits(site, dir))
                {
                    // Slot order is site order, so (slot, dir) sorts like (site, dir).
                    const auto key = static_cast<std::uint32_t>((slot << 1) | static_cast<std::size_t>(dir));
                    slab_.push_back(SlabEntry{nextTime_[slot], key});
                }
                draw_next(slot);
            }
        }

        // Counting sort into one bucket per expected event, then insertion
        // sort, which only has to undo disorder inside a bucket.
        const std::size_t n = slab_.size();
        const std::size_t buckets = std::max<std::size_t>(n, 1);
        const double scale = static_cast<double>(buckets) / slabWidth_;
        bucketStart_.assign(buckets + 1, 0);
        slabBucket_.resize(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            auto b = static_cast<std::size_t>((slab_[i].time - slabStart) * scale);
            b = std::min(b, buckets - 1);
            slabBucket_[i] = static_cast<std::uint32_t>(b);
            ++bucketStart_[b + 1];
        }
        for (std::size_t b = 0; b < buckets; ++b)
        {
            bucketStart_[b + 1] += bucketStart_[b];
        }
        sorted_.resize(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            sorted_[bucketStart_[slabBucket_[i]]++] = slab_[i];
        }
        for (std::size_t i = 1; i < n; ++i)
        {
            const SlabEntry e = sorted_[i];
            std::size_t j = i;
            while (j > 0 && entry_less(e, sorted_[j - 1]))
            {
                sorted_[j] = sorted_[j - 1];
                --j;
            }
            sorted_[j] = e;
        }
        cursor_ = 0;
    }

    bool ClockStream::pop_heap(std::size_t &slot)
    {
        if (heap_.empty())
        {
            return false;
        }
        slot = heap_.front();
        return nextTime_[slot] <= horizon_;
    }

    bool ClockStream::advance()
    {
        if (exhausted_)
        {
            return false;
        }
        if (options_.merge == Merge::Calendar)
        {
            while (cursor_ == sorted_.size())
            {
                fill_slab();
                if (exhausted_)
                {
                    return false;
                }
            }
            const SlabEntry &e = sorted_[cursor_++];
            pending_ = ClockEvent{e.time, site_of(e.key >> 1), static_cast<Direction>(e.key & 1u)};
            havePending_ = true;
            ++emitted_;
            return true;
        }
        std::size_t slot = 0;
        while (pop_heap(slot))
        {
            const ClockEvent e{nextTime_[slot], site_of(slot), nextDir_[slot]};
            draw_next(slot);
            auto greater = [this](std::uint32_t a, std::uint32_t b) { return before(b, a); };
            std::pop_heap(heap_.begin(), heap_.end(), greater);
            std::push_heap(heap_.begin(), heap_.end(), greater);
            if (emits(e.site, e.dir))
            {
                pending_ = e;
                havePending_ = true;
                ++emitted_;
                return true;
            }
        }
        exhausted_ = true;
        return false;
    }

    std::optional<ClockEvent> ClockStream::next_event()
    {
        if (!havePending_ && !advance())
        {
            return std::nullopt;
        }
        havePending_ = false;
        return pending_;
    }

    std::optional<double> ClockStream::peek_time()
    {
        if (!havePending_ && !advance())
        {
            return std::nullopt;
        }
        return pending_.time;
    }

    std::int64_t count_events(ClockStream stream, std::int64_t site, Direction dir, double from, double to)
    {
        require(to <= stream.horizon(), "count interval extends past the horizon");
        std::int64_t n = 0;
        stream.run_until(to, [&](const ClockEvent &e) {
            if (e.site == site && e.dir == dir && e.time >= from)
            {
                ++n;
            }
        });
        return n;
    }

    void write_event_log(std::ostream &out, ClockStream stream)
    {
        out << "time,site,dir\n";
        char buf[64];
        while (auto e = stream.next_event())
        {
            std::snprintf(buf, sizeof buf, "%.17g", e->time);
            out << buf << ',' << e->site << ',' << (e->dir == Direction::Right ? 'R' : 'L') << '\n';
        }
    }
} // namespace aseplab
