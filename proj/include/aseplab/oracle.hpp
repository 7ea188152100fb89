#pragma once

#include "aseplab/lattice.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace aseplab
{
    /// Dense generator of ring ASEP on N <= 12 sites. A state is the string
    /// omega_0 ... omega_{N-1} read as a binary number with omega_0 most
    /// significant; states are listed in increasing order, which is
    /// lexicographic order of the strings.
    struct GeneratorMatrix
    {
        int sites = 0;
        std::optional<int> count;
        std::vector<std::uint32_t> states;
        Eigen::MatrixXd rates;

        std::size_t dimension() const noexcept { return states.size(); }
        /// Index of a state; for a fixed-count sector this is its combinadic rank.
        std::size_t index_of(std::uint32_t state) const;
        std::string label(std::size_t index) const;
    };

    /// Rank of a weight-k string among all weight-k strings of length n in
    /// lexicographic order.
    std::size_t combinadic_rank(std::uint32_t state, int n);

    GeneratorMatrix ring_generator(int sites, const Params &params, std::optional<int> count = std::nullopt);

    /// Row sums zero, nonnegative off-diagonals, and every positive rate joins
    /// two states that differ by one adjacent swap.
    bool generator_valid(const GeneratorMatrix &g, double tol = 1e-14);

    /// max_s |(measure G)_s|.
    double stationarity_check(const GeneratorMatrix &g, const Eigen::VectorXd &measure);

    Eigen::VectorXd uniform_measure(const GeneratorMatrix &g);

    /// Distribution at time t from a point mass on `initial`, by uniformization
    /// with truncation error <= tol.
    Eigen::VectorXd transient_distribution(const GeneratorMatrix &g, std::size_t initial, double t,
                                           double tol = 1e-12, std::size_t maxTerms = 10000000);

    double total_variation(const Eigen::VectorXd &a, const Eigen::VectorXd &b);

    /// Marginals of the product blocking measure on mark labels -K..K.
    struct BlockingMarginals
    {
        std::int64_t K = 0;
        std::vector<double> one;   // P(mark = 1), index n + K
        std::vector<double> zero;  // P(mark = 0)
    };
    BlockingMarginals blocking_marginals(const Params &params, std::int64_t K);

    /// Largest |pi(x) rate(x->y) - pi(y) rate(y->x)| over adjacent exchanges
    /// of the mark chain on labels -K..K. The state factors outside the
    /// exchanged pair are maximized in closed form, so K up to a few hundred is
    /// exact without enumerating 2^(2K+1) states.
    double blocking_detailed_balance(const Params &params, const BlockingMarginals &marginals);
    double blocking_detailed_balance(const Params &params, std::int64_t K);

    /// Same quantity by enumerating every state (2K + 1 <= 20).
    double blocking_detailed_balance_enumerated(const Params &params, const BlockingMarginals &marginals);

    /// (sum_{z=0}^n nu^lambda(z)^2 / nu^rho(z), [1 + (rho - lambda)^2 / (rho (1 - rho))]^n)
    /// with binomial(n, .) masses, summed in log space.
    std::pair<double, double> change_of_measure_identity(double rho, double lambda, std::int64_t n);

    /// Golden file: `index,state,probability` with 15 significant digits.
    void write_distribution_csv(std::ostream &out, const GeneratorMatrix &g, const Eigen::VectorXd &p);

    /// Empirical distribution of the ring simulator at time t from `initial`.
    Eigen::VectorXd simulate_ring_distribution(const GeneratorMatrix &g, const Params &params, std::size_t initial,
                                               double t, std::uint64_t replicas, std::uint64_t seed);
} // namespace aseplab
