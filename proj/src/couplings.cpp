#include "aseplab/couplings.hpp"

#include "aseplab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace aseplab
{
    CoupledEnsemble::CoupledEnsemble(std::vector<HeightState> members, std::vector<Ordering> orderings)
        : members_(std::move(members)), orderings_(std::move(orderings))
    {
        require(!members_.empty(), "ensemble needs at least one member");
        window_ = members_.front().config().window();
        for (const HeightState &m : members_)
        {
            require(m.config().window() == window_, "ensemble members must share one window");
        }
        for (const Ordering &o : orderings_)
        {
            require(o.lower < members_.size() && o.upper < members_.size(), "ordering refers to a missing member");
            require(members_[o.lower].config().dominated_by(members_[o.upper].config()),
                    "declared ordering fails initially");
        }
    }

    void CoupledEnsemble::apply(const ClockEvent &e)
    {
        const std::int64_t b = e.bond(window_);
        for (HeightState &m : members_)
        {
            m.apply(b, e.dir);
        }
        check_orderings_at(b, window_.right_of(b));
    }

    void CoupledEnsemble::apply_member(std::size_t i, std::int64_t bond, Direction dir)
    {
        members_.at(i).apply(bond, dir);
    }

    void CoupledEnsemble::check_orderings_at(std::int64_t a, std::int64_t b) const
    {
        for (const Ordering &o : orderings_)
        {
            const Configuration &lo = members_[o.lower].config();
            const Configuration &hi = members_[o.upper].config();
            if ((lo.occupied(a) && !hi.occupied(a)) || (lo.occupied(b) && !hi.occupied(b)))
            {
                throw InvariantViolation("ordering " + std::to_string(o.lower) + " <= " + std::to_string(o.upper) +
                                         " broken near site " + std::to_string(a));
            }
        }
    }

    void CoupledEnsemble::check_orderings() const
    {
        for (const Ordering &o : orderings_)
        {
            ensure(members_[o.lower].config().dominated_by(members_[o.upper].config()),
                   "ordering " + std::to_string(o.lower) + " <= " + std::to_string(o.upper) + " broken");
        }
    }

    void evolve_coupled(CoupledEnsemble &ensemble, ClockStream &clock, double t)
    {
        clock.run_until(t, [&](const ClockEvent &e) { ensemble.apply(e); });
    }

    std::pair<Configuration, Configuration> sample_mu_pair(const Window &window, double rho, double lambda,
                                                           std::uint64_t seed)
    {
        require(rho >= 0.0 && rho <= 1.0 && lambda >= 0.0 && lambda <= rho, "pair law needs 0 <= lambda <= rho <= 1");
        Configuration eta(window);
        Configuration omega(window);
        const CounterRng rng(seed, StreamTag::Initial);
        for (std::int64_t s = window.lo; s <= window.hi; ++s)
        {
            const double u = rng.uniform(s, 0);
            eta.set(s, u < lambda);
            omega.set(s, u < rho);
        }
        return {std::move(eta), std::move(omega)};
    }

    std::int64_t count_discrepancies(const Configuration &eta, const Configuration &omega, std::int64_t j,
                                     std::int64_t u)
    {
        require(eta.window() == omega.window(), "configurations live on different windows");
        require(u > 0, "discrepancy window needs u > 0");
        const Window &w = omega.window();
        require(w.contains(j + 1) && w.contains(j + 2 * u), "discrepancy window leaves the simulation window");
        return omega.count(j + 1, j + 2 * u) - eta.count(j + 1, j + 2 * u);
    }

    SecondClassPair::SecondClassPair(const Window &window, double rho, std::uint64_t seed)
    {
        Configuration omega = sample_bernoulli(window, rho, seed);
        originOccupied_ = omega.occupied(0);
        omega.set(0, false);
        lower_ = HeightState(std::move(omega));
    }

    void SecondClassPair::step_at_discrepancy(std::int64_t b, Direction dir) noexcept
    {
        const Configuration &c = lower_.config();
        if (q_ == b)
        {
            // Upper holds a particle at b, lower a hole.
            if (dir == Direction::Right)
            {
                if (!c.occupied(b + 1))
                {
                    q_ = b + 1;
                }
            }
            else if (c.occupied(b + 1))
            {
                lower_.apply(b, Direction::Left);
                q_ = b + 1;
            }
            return;
        }
        if (dir == Direction::Right)
        {
            if (c.occupied(b))
            {
                lower_.apply(b, Direction::Right);
                q_ = b;
            }
        }
        else if (!c.occupied(b))
        {
            q_ = b;
        }
    }

    double mark_probability(std::int64_t n, const Params &params)
    {
        params.validate();
        // (q/p)^n is +inf for n < 0 at p = 1, giving the limit 0.
        return 1.0 / (1.0 + std::pow(params.ratio(), static_cast<double>(n)));
    }

    std::int64_t mark_truncation(const Params &params, double eps)
    {
        params.validate();
        require(eps > 0.0 && eps < 1.0, "truncation tolerance must lie in (0,1)");
        const double r = params.ratio();
        if (r == 0.0)
        {
            return 1;
        }
        const auto k = static_cast<std::int64_t>(std::ceil(std::log(eps * (1.0 - r)) / std::log(r)));
        return std::max<std::int64_t>(k, 1);
    }

    AuditCounters &AuditCounters::operator+=(const AuditCounters &o) noexcept
    {
        events += o.events;
        checks += o.checks;
        qaRightOfR += o.qaRightOfR;
        lRightOfQ += o.lRightOfQ;
        qLeftOfQa += o.qLeftOfQa;
        mAboveMq += o.mAboveMq;
        currentBound += o.currentBound;
        heightIdentity += o.heightIdentity;
        heightOrder += o.heightOrder;
        return *this;
    }

    namespace
    {
        std::vector<std::int64_t> sites_where(const Configuration &upper, const Configuration &lower)
        {
            std::vector<std::int64_t> out;
            const Window &w = upper.window();
            for (std::int64_t s = w.lo; s <= w.hi; ++s)
            {
                if (upper.occupied(s) && !lower.occupied(s))
                {
                    out.push_back(s);
                }
            }
            return out;
        }

        std::size_t index_of(const std::vector<std::int64_t> &sites, std::int64_t s)
        {
            const auto it = std::lower_bound(sites.begin(), sites.end(), s);
            ensure(it != sites.end() && *it == s, "tracked discrepancy is missing from the configuration");
            return static_cast<std::size_t>(it - sites.begin());
        }

        // Re-locates a single-discrepancy walker after an event on sites {a, b}.
        std::int64_t relocate_single(std::int64_t pos, std::int64_t a, std::int64_t b, bool diffA, bool diffB,
                                     const char *what)
        {
            if (pos == a || pos == b)
            {
                ensure(diffA != diffB, std::string(what) + ": expected exactly one discrepancy");
                return diffA ? a : b;
            }
            ensure(!diffA && !diffB, std::string(what) + ": a second discrepancy appeared");
            return pos;
        }
    } // namespace

    FiveProcess::FiveProcess(const Window &window, const Params &params, const FiveProcessOptions &options,
                             std::uint64_t seed)
        : params_(params), options_(options)
    {
        params_.validate();
        require(params_.q < params_.p, "the mark law needs q < p");
        require(window.boundary == Boundary::Frozen && window.contains(0) && window.contains(1),
                "five-process coupling needs a frozen window around the origin");
        require(options_.lambda >= 0.0 && options_.lambda < params_.rho, "five-process coupling needs lambda < rho");
        require(!(options_.conditioning == Conditioning::EventB && params_.q == 0.0),
                "event B has probability zero when p = 1");
        require(options_.maxAttempts > 0, "conditioning needs a positive attempt cap");
        K_ = options_.K > 0 ? options_.K : mark_truncation(params_);

        auto [eta, omega] = sample_mu_pair(window, params_.rho, options_.lambda, seed);
        eta.set(0, false);
        omega.set(0, true);

        const std::vector<std::int64_t> sites = sites_where(omega, eta);
        const std::size_t zero = index_of(sites, 0);
        if (zero < static_cast<std::size_t>(K_ + 1) || sites.size() - zero <= static_cast<std::size_t>(K_ + 1))
        {
            throw TruncationError("window holds fewer than K + 1 discrepancy labels on one side of the origin");
        }

        // Marks of labels -K..K; beyond the truncation they take the limit values.
        const CounterRng rng(seed, StreamTag::Marks);
        std::vector<std::uint8_t> marks(static_cast<std::size_t>(2 * K_ + 1));
        while (true)
        {
            ++attempts_;
            std::int64_t nR = -K_ - 1;
            std::int64_t nL = K_ + 1;
            for (std::int64_t k = -K_; k <= K_; ++k)
            {
                const bool one = rng.uniform(k, static_cast<std::uint64_t>(attempts_ - 1)) < mark_probability(k, params_);
                marks[static_cast<std::size_t>(k + K_)] = one ? 1 : 0;
                if (!one)
                {
                    nR = k;
                }
                else if (nL == K_ + 1)
                {
                    nL = k;
                }
            }
            eventA_ = nR >= 0;
            eventB_ = nL <= 0 && 0 <= nR;
            const bool ok = options_.conditioning == Conditioning::None ||
                            (options_.conditioning == Conditioning::EventA && eventA_) ||
                            (options_.conditioning == Conditioning::EventB && eventB_);
            if (ok)
            {
                break;
            }
            require(attempts_ < options_.maxAttempts, "conditioning event not met within the attempt cap");
        }

        Configuration zeta = eta;
        for (std::size_t i = 0; i < sites.size(); ++i)
        {
            const std::int64_t k = static_cast<std::int64_t>(i) - static_cast<std::int64_t>(zero);
            bool one = k > 0;
            if (k >= -K_ && k <= K_)
            {
                one = marks[static_cast<std::size_t>(k + K_)] == 1;
            }
            zeta.set(sites[i], one);
        }
        Configuration etaPlus = eta;
        etaPlus.set(0, true);
        Configuration omegaMinus = omega;
        omegaMinus.set(0, false);

        std::vector<HeightState> members;
        members.emplace_back(std::move(eta));
        members.emplace_back(std::move(etaPlus));
        members.emplace_back(std::move(zeta));
        members.emplace_back(std::move(omegaMinus));
        members.emplace_back(std::move(omega));
        ensemble_ = CoupledEnsemble(std::move(members), {{Eta, Zeta},
                                                         {Zeta, Omega},
                                                         {Eta, OmegaMinus},
                                                         {OmegaMinus, Omega},
                                                         {Eta, EtaPlus},
                                                         {EtaPlus, Omega}});

        const Configuration &z = ensemble_.member(Zeta).config();
        const Configuration &o = ensemble_.member(Omega).config();
        const Configuration &e = ensemble_.member(Eta).config();
        const std::vector<std::int64_t> thirdClass = sites_where(o, z);
        const std::vector<std::int64_t> secondClass = sites_where(z, e);
        ensure(!thirdClass.empty() && !secondClass.empty(), "forced marks must leave both kinds of discrepancy");
        r_ = thirdClass.back();
        l_ = secondClass.front();
        ensure((r_ >= 0) == eventA_, "R(0) disagrees with the marks");
    }

    bool FiveProcess::discrepancy(std::int64_t s) const
    {
        return ensemble_.member(Omega).config().occupied(s) && !ensemble_.member(Eta).config().occupied(s);
    }

    void FiveProcess::step(const ClockEvent &e)
    {
        const Window &w = ensemble_.window();
        const std::int64_t a = e.bond(w);
        const std::int64_t b = w.right_of(a);
        if (options_.dynamics == MarkDynamics::IndependentClocks && discrepancy(a) && discrepancy(b))
        {
            for (std::size_t i = 0; i < ensemble_.size(); ++i)
            {
                if (i != Zeta)
                {
                    ensemble_.apply_member(i, a, e.dir);
                }
            }
            ensemble_.check_orderings_at(a, b);
        }
        else
        {
            ensemble_.apply(e);
        }
        ++audit_.events;
        update_trackers(a, b);
        check_claims();
    }

    void FiveProcess::mark_exchange(const ClockEvent &e)
    {
        const Window &w = ensemble_.window();
        const std::int64_t a = e.bond(w);
        const std::int64_t b = w.right_of(a);
        if (!(discrepancy(a) && discrepancy(b)))
        {
            return;
        }
        ensemble_.apply_member(Zeta, a, e.dir);
        ensemble_.check_orderings_at(a, b);
        update_trackers(a, b);
    }

    void FiveProcess::run_until(double t, ClockStream &main, ClockStream *marks)
    {
        if (marks == nullptr)
        {
            main.run_until(t, [this](const ClockEvent &e) { step(e); });
            return;
        }
        while (true)
        {
            const std::optional<double> tm = main.peek_time();
            const std::optional<double> tx = marks->peek_time();
            const bool mainDue = tm && *tm <= t;
            const bool marksDue = tx && *tx <= t;
            if (!mainDue && !marksDue)
            {
                return;
            }
            if (mainDue && (!marksDue || *tm <= *tx))
            {
                step(*main.next_event());
            }
            else
            {
                mark_exchange(*marks->next_event());
            }
        }
    }

    void FiveProcess::update_trackers(std::int64_t a, std::int64_t b)
    {
        const Configuration &e = ensemble_.member(Eta).config();
        const Configuration &ep = ensemble_.member(EtaPlus).config();
        const Configuration &z = ensemble_.member(Zeta).config();
        const Configuration &om = ensemble_.member(OmegaMinus).config();
        const Configuration &o = ensemble_.member(Omega).config();

        q_ = relocate_single(q_, a, b, ep[a] != e[a], ep[b] != e[b], "Q");
        qa_ = relocate_single(qa_, a, b, o[a] != om[a], o[b] != om[b], "Q_a");

        const bool dA = o[a] && !e[a];
        const bool dB = o[b] && !e[b];
        if ((x0_ == a || x0_ == b) && !(dA && dB))
        {
            ensure(dA || dB, "label 0 lost its discrepancy");
            x0_ = dA ? a : b;
        }

        const bool rA = o[a] && !z[a];
        const bool rB = o[b] && !z[b];
        if (r_ == a || r_ == b)
        {
            ensure(rA || rB, "R lost its discrepancy");
            r_ = rB ? b : a;
        }
        else if (r_ < a)
        {
            ensure(!rA && !rB, "an omega - zeta discrepancy appeared right of R");
        }

        const bool lA = z[a] && !e[a];
        const bool lB = z[b] && !e[b];
        if (l_ == a || l_ == b)
        {
            ensure(lA || lB, "L lost its discrepancy");
            l_ = lA ? a : b;
        }
        else if (l_ > b)
        {
            ensure(!lA && !lB, "a zeta - eta discrepancy appeared left of L");
        }
    }

    void FiveProcess::check_claims()
    {
        if (options_.dynamics == MarkDynamics::Coupled)
        {
            if (eventA_)
            {
                ++audit_.checks;
                audit_.qaRightOfR += qa_ > r_ ? 1 : 0;
            }
            if (eventB_)
            {
                ++audit_.checks;
                audit_.lRightOfQ += l_ > q_ ? 1 : 0;
            }
        }
        if (params_.q == 0.0)
        {
            ++audit_.checks;
            audit_.qLeftOfQa += q_ < qa_ ? 1 : 0;
        }
    }

    std::vector<std::int64_t> FiveProcess::discrepancy_sites() const
    {
        return sites_where(ensemble_.member(Omega).config(), ensemble_.member(Eta).config());
    }

    std::vector<std::int64_t> FiveProcess::label_positions() const
    {
        const std::vector<std::int64_t> sites = discrepancy_sites();
        const std::size_t zero = index_of(sites, x0_);
        if (zero < static_cast<std::size_t>(K_) || sites.size() - zero <= static_cast<std::size_t>(K_))
        {
            throw TruncationError("labels -K..K are no longer inside the window");
        }
        return {sites.begin() + static_cast<std::ptrdiff_t>(zero - static_cast<std::size_t>(K_)),
                sites.begin() + static_cast<std::ptrdiff_t>(zero + static_cast<std::size_t>(K_) + 1)};
    }

    std::vector<std::uint8_t> FiveProcess::marks() const
    {
        const Configuration &z = ensemble_.member(Zeta).config();
        std::vector<std::uint8_t> out;
        for (std::int64_t s : label_positions())
        {
            out.push_back(z.occupied(s) ? 1 : 0);
        }
        return out;
    }

    std::pair<std::int64_t, std::int64_t> FiveProcess::extreme_labels() const
    {
        const std::vector<std::int64_t> sites = discrepancy_sites();
        const auto zero = static_cast<std::int64_t>(index_of(sites, x0_));
        return {static_cast<std::int64_t>(index_of(sites, l_)) - zero,
                static_cast<std::int64_t>(index_of(sites, r_)) - zero};
    }

    AuditRecord FiveProcess::record(double t) const
    {
        AuditRecord rec;
        rec.t = t;
        rec.Q = q_;
        rec.Qa = qa_;
        rec.X0 = x0_;
        rec.R = r_;
        rec.L = l_;
        rec.eventA = eventA_;
        rec.eventB = eventB_;
        return rec;
    }

    std::int64_t segment_shift(const Params &params, double lambda, double t, std::int64_t u)
    {
        params.validate();
        require(u > 0, "segment perturbation needs u > 0");
        require(lambda >= 0.0 && lambda < params.rho, "segment perturbation needs lambda < rho");
        require(std::isfinite(t) && t >= 0.0, "segment time must be finite and nonnegative");
        return int_toward_zero(char_speed(lambda, params) * t) - int_toward_zero(char_speed(params.rho, params) * t) +
               u;
    }

    double priority_weight(std::int64_t k, const Params &params)
    {
        params.validate();
        require(params.q < params.p, "the priority law needs q < p");
        if (k > 0)
        {
            return 0.0;
        }
        const double r = params.ratio();
        return (1.0 - r) * std::pow(r, static_cast<double>(-k));
    }

    SegmentPerturbation::SegmentPerturbation(const Window &window, const Params &params,
                                             const SegmentOptions &options, std::uint64_t seed)
        : params_(params), options_(options)
    {
        params_.validate();
        require(params_.q < params_.p, "segment perturbation needs q < p");
        n_ = segment_shift(params_, options_.lambda, options_.t, options_.u);
        require(window.boundary == Boundary::Frozen && window.contains(-n_) && window.contains(1),
                "segment window must contain -n and the origin column");
        const std::int64_t K = options_.K > 0 ? options_.K : mark_truncation(params_);

        Configuration eta(window);
        Configuration zeta(window);
        const CounterRng rng(seed, StreamTag::Initial);
        for (std::int64_t s = window.lo; s <= window.hi; ++s)
        {
            const double u = rng.uniform(s, 0);
            if (s == -n_)
            {
                zeta.set(s, u < params_.rho);
            }
            else if (s > -n_ && s <= 0)
            {
                eta.set(s, u < options_.lambda);
                zeta.set(s, u < options_.lambda);
            }
            else
            {
                eta.set(s, u < options_.lambda);
                zeta.set(s, u < params_.rho);
            }
        }
        Configuration xi = eta;
        for (std::int64_t s = window.lo; s <= -n_; ++s)
        {
            xi.set(s, zeta.occupied(s));
        }
        Configuration etaPlus = eta;
        etaPlus.set(-n_, true);

        const std::vector<std::int64_t> ys = sites_where(xi, eta);
        if (ys.size() < static_cast<std::size_t>(K + 1))
        {
            throw TruncationError("window holds fewer than K + 1 labels for the priority chain");
        }

        // m(0) = -k with k geometric: P(k) = (1 - r) r^k.
        const double r = params_.ratio();
        std::int64_t k = 0;
        if (r > 0.0)
        {
            const double u = CounterRng(seed, StreamTag::Priority).uniform(0, 0);
            k = static_cast<std::int64_t>(std::floor(std::log(u) / std::log(r)));
        }
        if (k >= static_cast<std::int64_t>(ys.size()))
        {
            throw TruncationError("priority label m(0) falls outside the window");
        }
        m_ = -k;
        posM_ = ys[ys.size() - 1 - static_cast<std::size_t>(k)];
        q_ = -n_;
        rightOfQ_ = 0;

        std::vector<HeightState> members;
        members.emplace_back(std::move(eta));
        members.emplace_back(std::move(etaPlus));
        members.emplace_back(std::move(xi));
        members.emplace_back(std::move(zeta));
        ensemble_ = CoupledEnsemble(std::move(members), {{Eta, Xi}, {Xi, Zeta}, {Eta, EtaPlus}});
    }

    bool SegmentPerturbation::discrepancy(std::int64_t s) const
    {
        return ensemble_.member(Xi).config().occupied(s) && !ensemble_.member(Eta).config().occupied(s);
    }

    void SegmentPerturbation::step(const ClockEvent &e)
    {
        const Window &w = ensemble_.window();
        const std::int64_t a = e.bond(w);
        const std::int64_t b = w.right_of(a);
        const bool dA = discrepancy(a);
        const bool dB = discrepancy(b);
        const std::int64_t before = (dA && a > q_ ? 1 : 0) + (dB && b > q_ ? 1 : 0);

        if (dA && dB)
        {
            if (e.dir == Direction::Right && posM_ == a)
            {
                ensure(m_ < 0, "label m + 1 exists right of label 0");
                ++m_;
                posM_ = b;
            }
            else if (e.dir == Direction::Left && posM_ == b)
            {
                --m_;
                posM_ = a;
            }
        }

        ensemble_.apply(e);
        ++audit_.events;

        const Configuration &et = ensemble_.member(Eta).config();
        const Configuration &ep = ensemble_.member(EtaPlus).config();
        q_ = relocate_single(q_, a, b, ep[a] != et[a], ep[b] != et[b], "Q^(-n)");

        const bool nA = discrepancy(a);
        const bool nB = discrepancy(b);
        if ((posM_ == a || posM_ == b) && !(nA && nB))
        {
            ensure(nA || nB, "priority label lost its particle");
            posM_ = nA ? a : b;
        }
        const std::int64_t after = (nA && a > q_ ? 1 : 0) + (nB && b > q_ ? 1 : 0);
        rightOfQ_ += after - before;

        ++audit_.checks;
        audit_.mAboveMq += m_ > mQ() ? 1 : 0;
    }

    void SegmentPerturbation::run_until(double t, ClockStream &main)
    {
        main.run_until(t, [this](const ClockEvent &e) { step(e); });
    }

    void SegmentPerturbation::check_currents(double t, const std::vector<double> &speeds)
    {
        const HeightState &eta = ensemble_.member(Eta);
        const HeightState &xi = ensemble_.member(Xi);
        const HeightState &zeta = ensemble_.member(Zeta);
        const Window &w = ensemble_.window();

        ++audit_.checks;
        if (q_ >= w.lo && q_ < w.hi)
        {
            audit_.heightIdentity += (xi.height(q_) - eta.height(q_) != rightOfQ_) ? 1 : 0;
        }

        // h^zeta - h^xi column by column, walking out from the anchor column.
        ++audit_.checks;
        const Configuration &zc = zeta.config();
        const Configuration &xc = xi.config();
        std::int64_t d = zeta.anchor() - xi.anchor();
        bool ok = d <= 0;
        for (std::int64_t x = 1; x < w.hi && ok; ++x)
        {
            d -= static_cast<std::int64_t>(zc[x]) - static_cast<std::int64_t>(xc[x]);
            ok = d <= 0;
        }
        d = zeta.anchor() - xi.anchor();
        for (std::int64_t x = 0; x > w.lo && ok; --x)
        {
            d += static_cast<std::int64_t>(zc[x]) - static_cast<std::int64_t>(xc[x]);
            ok = d <= 0;
        }
        audit_.heightOrder += ok ? 0 : 1;

        for (double v : speeds)
        {
            const std::int64_t x = int_toward_zero(v * t);
            if (x < w.lo || x >= w.hi || q_ > x)
            {
                continue;
            }
            ++audit_.checks;
            audit_.currentBound += (zeta.height(x) - eta.height(x) > N()) ? 1 : 0;
        }
    }

    AuditRecord SegmentPerturbation::record(double t) const
    {
        AuditRecord rec;
        rec.t = t;
        rec.Q = q_;
        rec.m = m_;
        rec.N = N();
        return rec;
    }

    Window five_process_window(const Params &params, double lambda, std::int64_t K, double vmax, double t)
    {
        params.validate();
        require(lambda >= 0.0 && lambda < params.rho, "window sizing needs lambda < rho");
        const auto labels = static_cast<std::int64_t>(std::ceil(2.0 * static_cast<double>(K + 2) / (params.rho - lambda)));
        return Window::centered(light_cone_half_width(vmax, t) + labels);
    }

    Window segment_window(const Params &params, const SegmentOptions &options, double vmax, double horizon)
    {
        const std::int64_t n = segment_shift(params, options.lambda, options.t, options.u);
        const std::int64_t K = options.K > 0 ? options.K : mark_truncation(params);
        const auto labels =
            static_cast<std::int64_t>(std::ceil(2.0 * static_cast<double>(K + 2) / (params.rho - options.lambda)));
        const std::int64_t lo = -n - light_cone_half_width(0.0, horizon) - labels;
        const std::int64_t hi = light_cone_half_width(vmax, horizon);
        return Window::make(lo, hi);
    }
} // namespace aseplab
