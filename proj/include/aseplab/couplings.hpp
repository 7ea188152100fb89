#pragma once

#include "aseplab/clock.hpp"
#include "aseplab/lattice.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace aseplab
{
    /// Member `lower` must stay sitewise below member `upper`.
    struct Ordering
    {
        std::size_t lower = 0;
        std::size_t upper = 0;
    };

    /// Configurations driven by one clock stream under the basic coupling.
    /// Declared orderings are checked at the two touched sites after every
    /// event, which keeps them verified everywhere at all times.
    class CoupledEnsemble
    {
    public:
        CoupledEnsemble() = default;
        CoupledEnsemble(std::vector<HeightState> members, std::vector<Ordering> orderings);

        const Window &window() const noexcept { return window_; }
        std::size_t size() const noexcept { return members_.size(); }
        const HeightState &member(std::size_t i) const { return members_.at(i); }
        const std::vector<Ordering> &orderings() const noexcept { return orderings_; }

        /// Applies the event to every member.
        void apply(const ClockEvent &e);

        /// Applies a jump to member i only (used by the independent mark clocks).
        void apply_member(std::size_t i, std::int64_t bond, Direction dir);

        /// Throws InvariantViolation if a declared ordering fails at site a or b.
        void check_orderings_at(std::int64_t a, std::int64_t b) const;
        /// Full-window ordering check.
        void check_orderings() const;

    private:
        Window window_{};
        std::vector<HeightState> members_;
        std::vector<Ordering> orderings_;
    };

    /// Runs the ensemble on the stream up to time t.
    void evolve_coupled(CoupledEnsemble &ensemble, ClockStream &clock, double t);

    /// Pair (eta, omega) with i.i.d. sites from the table
    /// mu(0,0) = 1 - rho, mu(0,1) = rho - lambda, mu(1,0) = 0, mu(1,1) = lambda.
    /// Both coordinates threshold one uniform per site, so omega equals
    /// sample_bernoulli(window, rho, seed).
    std::pair<Configuration, Configuration> sample_mu_pair(const Window &window, double rho, double lambda,
                                                           std::uint64_t seed);

    /// sum_{i=j+1}^{j+2u} (omega_i - eta_i).
    std::int64_t count_discrepancies(const Configuration &eta, const Configuration &omega, std::int64_t j,
                                     std::int64_t u);

    /// Stationary configuration omega together with the second class particle
    /// between omega with the origin emptied (lower) and filled (upper). Only the
    /// lower configuration and the discrepancy position are stored.
    class SecondClassPair
    {
    public:
        SecondClassPair() = default;
        SecondClassPair(const Window &window, double rho, std::uint64_t seed);

        void step(const ClockEvent &e) noexcept
        {
            const std::int64_t b = e.bond(lower_.config().window());
            if (q_ != b && q_ != b + 1)
            {
                lower_.apply(b, e.dir);
                return;
            }
            step_at_discrepancy(b, e.dir);
        }

        /// Position of the discrepancy: Q for the lower configuration, Q_a for
        /// the upper one.
        std::int64_t discrepancy() const noexcept { return q_; }
        /// True when the sampled omega had a particle at the origin.
        bool origin_occupied() const noexcept { return originOccupied_; }

        const HeightState &lower() const noexcept { return lower_; }
        std::int64_t lower_current(std::int64_t x) const { return lower_.height(x); }
        std::int64_t upper_current(std::int64_t x) const { return lower_.height(x) + (q_ > x ? 1 : 0); }
        /// Current of the unconditioned stationary member.
        std::int64_t stationary_current(std::int64_t x) const
        {
            return originOccupied_ ? upper_current(x) : lower_current(x);
        }

        /// Particles of the stationary member in [a, b].
        std::int64_t stationary_count(std::int64_t a, std::int64_t b) const
        {
            const bool q = originOccupied_ && q_ >= a && q_ <= b;
            return lower_.config().count(a, b) + (q ? 1 : 0);
        }

    private:
        void step_at_discrepancy(std::int64_t b, Direction dir) noexcept;

        HeightState lower_;
        std::int64_t q_ = 0;
        bool originOccupied_ = false;
    };

    /// P(mark = 1) for the discrepancy with label n: 1 / (1 + (q/p)^n), with
    /// the p = 1 limits (1 for n > 0, 0 for n < 0, 1/2 at n = 0).
    double mark_probability(std::int64_t n, const Params &params);

    /// Smallest K with P(some mark beyond +-K is anomalous) < 2 eps; 1 when p = 1.
    std::int64_t mark_truncation(const Params &params, double eps = 1e-12);

    enum class MarkDynamics
    {
        /// Marks ride the basic coupling of zeta on the main clocks.
        Coupled,
        /// Marks exchange on an independent clock stream; zeta ignores main
        /// events at bonds whose two sites are both omega - eta discrepancies.
        IndependentClocks,
    };

    enum class Conditioning
    {
        None,
        /// {0 <= R(0)}
        EventA,
        /// {L(0) <= 0 <= R(0)}
        EventB,
    };

    struct FiveProcessOptions
    {
        double lambda = 0.4;
        /// 0 selects mark_truncation(params).
        std::int64_t K = 0;
        MarkDynamics dynamics = MarkDynamics::Coupled;
        Conditioning conditioning = Conditioning::None;
        int maxAttempts = 100000;
    };

    /// Counts of claims checked event by event.
    struct AuditCounters
    {
        std::uint64_t events = 0;
        std::uint64_t checks = 0;
        std::uint64_t qaRightOfR = 0;      // on A: Q_a <= R failed
        std::uint64_t lRightOfQ = 0;       // on B: L <= Q failed
        std::uint64_t qLeftOfQa = 0;       // p = 1: Q >= Q_a failed
        std::uint64_t mAboveMq = 0;        // m <= m_Q failed
        std::uint64_t currentBound = 0;    // Q <= [Vt] but J^zeta - J^eta > N
        std::uint64_t heightIdentity = 0;  // -m_Q != h^xi_Q - h^eta_Q
        std::uint64_t heightOrder = 0;     // h^zeta <= h^xi failed somewhere

        std::uint64_t violations() const noexcept
        {
            return qaRightOfR + lRightOfQ + qLeftOfQa + mAboveMq + currentBound + heightIdentity + heightOrder;
        }
        AuditCounters &operator+=(const AuditCounters &o) noexcept;
    };

    /// Trajectory sample exported as one JSON line.
    struct AuditRecord
    {
        double t = 0.0;
        std::optional<std::int64_t> Q, Qa, X0, R, L, m, N;
        std::optional<bool> eventA, eventB;
    };

    /// eta, eta+ = eta + delta_0, zeta, omega- = omega - delta_0, omega, from the
    /// pair law conditioned on eta_0 = 0, omega_0 = 1, with zeta built from marks.
    class FiveProcess
    {
    public:
        enum Member : std::size_t
        {
            Eta = 0,
            EtaPlus = 1,
            Zeta = 2,
            OmegaMinus = 3,
            Omega = 4,
        };

        FiveProcess(const Window &window, const Params &params, const FiveProcessOptions &options,
                    std::uint64_t seed);

        const CoupledEnsemble &ensemble() const noexcept { return ensemble_; }
        const Params &params() const noexcept { return params_; }
        std::int64_t K() const noexcept { return K_; }

        /// Main clock event.
        void step(const ClockEvent &e);
        /// Mark-exchange event (IndependentClocks only): a right arrow turns
        /// marks (1,0) into (0,1), a left arrow the reverse.
        void mark_exchange(const ClockEvent &e);

        /// Runs both streams (marks may be null in Coupled mode) to time t.
        void run_until(double t, ClockStream &main, ClockStream *marks);

        std::int64_t Q() const noexcept { return q_; }
        std::int64_t Qa() const noexcept { return qa_; }
        std::int64_t X0() const noexcept { return x0_; }
        std::int64_t R() const noexcept { return r_; }
        std::int64_t L() const noexcept { return l_; }
        bool eventA() const noexcept { return eventA_; }
        bool eventB() const noexcept { return eventB_; }
        /// Rejection attempts used to meet the conditioning.
        int attempts() const noexcept { return attempts_; }

        /// Marks of labels -K..K at the current time (index k + K).
        std::vector<std::uint8_t> marks() const;
        /// Positions X_k for k in -K..K.
        std::vector<std::int64_t> label_positions() const;
        /// (n_L, n_R) at the current time.
        std::pair<std::int64_t, std::int64_t> extreme_labels() const;

        const AuditCounters &audit() const noexcept { return audit_; }
        AuditRecord record(double t) const;

    private:
        bool discrepancy(std::int64_t s) const;
        void update_trackers(std::int64_t a, std::int64_t b);
        void check_claims();
        std::vector<std::int64_t> discrepancy_sites() const;
        void assign_marks(std::uint64_t seed);

        CoupledEnsemble ensemble_;
        Params params_;
        FiveProcessOptions options_;
        std::int64_t K_ = 1;
        std::int64_t q_ = 0, qa_ = 0, x0_ = 0, r_ = 0, l_ = 0;
        bool eventA_ = false, eventB_ = false;
        int attempts_ = 0;
        AuditCounters audit_;
    };

    struct SegmentOptions
    {
        double lambda = 0.4;
        /// Time used in n = [V^lambda t] - [V^rho t] + u.
        double t = 0.0;
        std::int64_t u = 1;
        /// Labels available to the priority chain; 0 selects mark_truncation(params).
        std::int64_t K = 0;
    };

    /// n = [V^lambda t] - [V^rho t] + u.
    std::int64_t segment_shift(const Params &params, double lambda, double t, std::int64_t u);

    /// pi(k) = (1 - q/p)(q/p)^{|k|} for k <= 0.
    double priority_weight(std::int64_t k, const Params &params);

    /// eta, eta+ = eta + delta_{-n}, xi, zeta from the segment-perturbed
    /// initial law, with the tagged particle Q^(-n) and the priority label m.
    class SegmentPerturbation
    {
    public:
        enum Member : std::size_t
        {
            Eta = 0,
            EtaPlus = 1,
            Xi = 2,
            Zeta = 3,
        };

        SegmentPerturbation(const Window &window, const Params &params, const SegmentOptions &options,
                            std::uint64_t seed);

        const CoupledEnsemble &ensemble() const noexcept { return ensemble_; }
        std::int64_t n() const noexcept { return n_; }

        void step(const ClockEvent &e);
        void run_until(double t, ClockStream &main);

        std::int64_t Q() const noexcept { return q_; }
        std::int64_t m() const noexcept { return m_; }
        std::int64_t N() const noexcept { return -m_; }
        /// max{k : Y_k <= Q}, i.e. minus the xi - eta count strictly right of Q.
        std::int64_t mQ() const noexcept { return -rightOfQ_; }
        std::int64_t Y_m() const noexcept { return posM_; }

        /// Checks the current-difference bound and height relations at time t
        /// for each observer speed in `speeds`; failures are counted.
        void check_currents(double t, const std::vector<double> &speeds);

        const AuditCounters &audit() const noexcept { return audit_; }
        AuditRecord record(double t) const;

    private:
        bool discrepancy(std::int64_t s) const;

        CoupledEnsemble ensemble_;
        Params params_;
        SegmentOptions options_;
        std::int64_t n_ = 0;
        std::int64_t q_ = 0;
        std::int64_t m_ = 0;
        std::int64_t posM_ = 0;
        std::int64_t rightOfQ_ = 0;
        AuditCounters audit_;
    };

    /// Frozen window for a five-process run to time t observed at speeds up to
    /// |vmax|: light cone plus room for labels -K..K at discrepancy density
    /// rho - lambda.
    Window five_process_window(const Params &params, double lambda, std::int64_t K, double vmax, double t);

    /// Frozen window for a segment run: light cone around [-n, 0], plus room
    /// for K + 1 labels left of -n.
    Window segment_window(const Params &params, const SegmentOptions &options, double vmax, double horizon);
} // namespace aseplab
