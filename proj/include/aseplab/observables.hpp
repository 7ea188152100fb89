#pragma once

#include "aseplab/lattice.hpp"
#include "aseplab/stats.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace aseplab
{
    /// J^(v)(t) = h_{[vt]}(t); cross-checked against the crossing count.
    std::int64_t current(const HeightState &state, double v, double t);

    /// t (p - q) rho (1 - rho) - rho [vt].
    double mean_current_formula(const Params &params, double rho, double v, double t);

    /// rho (1 - rho) |V^rho - v|.
    double sigma_squared(const Params &params, double rho, double v);

    /// t (p - q)(1 - 2 rho), the mean displacement of the second class particle.
    double mean_displacement(const Params &params, double rho, double t);

    struct IdentityEstimate
    {
        Estimate lhs;   // Var J^(V)(t)
        Estimate rhs;   // rho (1 - rho) E|[Vt] - Q(t)|
        Estimate rhsA;  // same with Q_a
        Estimate meanQ;
        Estimate meanQa;
    };

    /// Both sides of the variance identity at observer column x = [Vt].
    /// J holds stationary currents, Q and Qa positions, one entry per replica.
    IdentityEstimate variance_identity_estimators(std::span<const double> J, std::span<const double> Q,
                                                  std::span<const double> Qa, double rho, std::int64_t x);

    /// Var(J^(v)(t)) / t.
    Estimate off_characteristic_variance(std::span<const double> J, double t);

    struct TwoPointTable
    {
        double t = 0.0;
        std::int64_t center = 0;                // [V^rho t]
        std::vector<std::int64_t> offsets;      // i - center
        std::vector<double> S;
        std::vector<double> S_se;
        double lowTail = 0.0;                   // S mass left of the support
        double highTail = 0.0;                  // S mass right of the support
        Estimate mass;                          // sum_i S(i,t)
        Estimate firstMoment;                   // sum_i i S(i,t)
    };

    /// Half-width of the S(i,t) support around [V^rho t]: 6 t^{2/3} + 20.
    std::int64_t two_point_half_width(double t);

    /// S(i,t) = rho (1 - rho) P(Q(t) = i) from conditioned second class runs.
    TwoPointTable two_point_estimate(std::span<const double> Q, double t, const Params &params, double rho);

    /// sum_i Cov(omega_i(t), omega_0(0)) over a window of sites, estimated
    /// from the per-replica particle count in that window and omega_0(0).
    /// Compares with the mass sum rule of S without going through Q.
    Estimate direct_two_point_mass(std::span<const double> windowCount, std::span<const double> originOccupied);

    struct DiffusivityEstimate
    {
        Estimate fromTable;     // (1 / (t rho (1 - rho))) sum (i - V t)^2 S(i,t)
        Estimate fromVariance;  // Var(Q(t)) / t
    };

    DiffusivityEstimate diffusivity(std::span<const double> Q, double t, const Params &params, double rho);

    /// E|Q(t) - [V^rho t]|^m / t^{2m/3} for 1 <= m < 3.
    Estimate normalized_moment(std::span<const double> Q, double t, const Params &params, double rho, double m);

    struct CurrentRow
    {
        double t = 0.0;
        double v = 0.0;
        double mean = 0.0;
        Estimate var;
    };

    void write_current_csv(std::ostream &out, std::span<const CurrentRow> rows);
    void write_two_point_csv(std::ostream &out, std::span<const TwoPointTable> tables);
    struct DiffusivityRow
    {
        double t = 0.0;
        Estimate D;
    };
    void write_diffusivity_csv(std::ostream &out, std::span<const DiffusivityRow> rows);
} // namespace aseplab
