#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sfs/potentials.hpp"

namespace sfs {

//! Gibbs measure mu_sigma(dx) = exp(-V(x)/sigma) dx / C_sigma.
struct GibbsSpec
{
    PotentialPtr potential;
    double sigma = 1.0;
};

/*!
 * Quadrature tables for a one-dimensional Gibbs measure on [-L, L].
 *
 * Cell masses use Simpson's rule on each grid cell, so the CDF is exact at
 * the nodes up to O(h^4). Between nodes the CDF is linear, which keeps the
 * inverse CDF monotone and makes cdf(quantile(u)) == u up to rounding.
 */
class GibbsOracle1D
{
  public:
    double sigma() const { return sigma_; }
    double domain_bound() const { return bound_; }
    std::span<double const> grid() const { return grid_; }
    std::span<double const> log_density() const { return log_density_; }
    std::span<double const> cdf_table() const { return cdf_; }

    //! C_sigma = integral of exp(-V/sigma) over the real line.
    double normalizer() const;
    double log_normalizer() const { return log_normalizer_; }
    //! Upper bound on the relative mass outside [-L, L].
    double truncation_bound() const { return truncation_bound_; }

    double density(double x) const;
    double cdf(double x) const;
    double quantile(double u) const;
    //! mu_sigma((a, b)).
    double mass_between(double a, double b) const;
    //! mu_sigma(V(x) - min V >= tau), with level crossings located by bisection.
    double tail_mass(double tau) const;

  private:
    friend GibbsOracle1D build_oracle_1d(GibbsSpec const&, std::size_t, std::optional<double>);

    PotentialPtr potential_;
    double sigma_ = 1.0;
    double bound_ = 0.0;
    double step_ = 0.0;
    double log_shift_ = 0.0;  // max of -V/sigma on the grid
    double log_normalizer_ = 0.0;
    double truncation_bound_ = 0.0;
    std::vector<double> grid_;
    std::vector<double> log_density_;  // -V/sigma at the nodes
    std::vector<double> cdf_;
};

//! Smallest symmetric domain whose Gaussian tail is below 1e-14 of the mass.
double default_domain_bound(Potential const& p, double sigma);

/*!
 * Build quadrature tables for a d = 1 Gibbs measure.
 *
 * Throws std::invalid_argument for dim != 1, sigma outside (0, 1],
 * grid_points < 1000, or when the potential has no quadratic tail that lets
 * the mass outside [-L, L] be bounded below 1e-12.
 */
GibbsOracle1D build_oracle_1d(GibbsSpec const& spec, std::size_t grid_points,
                              std::optional<double> L = std::nullopt);

//! n i.i.d. draws by inverse CDF; deterministic in `seed`.
std::vector<double> sample_oracle(GibbsOracle1D const& oracle, std::size_t n, std::uint64_t seed);

double tail_mass(GibbsOracle1D const& oracle, double tau);

//! Limiting cluster weights det(H_i)^{-1/2} / sum_j det(H_j)^{-1/2}.
std::vector<double> laplace_weights(Potential const& p);

}  // namespace sfs
