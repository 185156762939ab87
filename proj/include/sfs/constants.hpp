#pragma once

#include <cstddef>
#include <optional>

#include <json.hpp>

#include "sfs/potentials.hpp"

namespace sfs {

struct ConstantsOptions
{
    std::size_t grid_points_per_dim = 201;
    //! Ball radius for the M-constants; defaults to the potential's tail radius.
    std::optional<double> radius;
    //! Parameters at which the probability and W2 bounds are evaluated.
    double tau = 0.5;
    double epsilon = 0.25;
    std::size_t K = 200;
    std::size_t m = 1000;
};

/*!
 * Constants of the drift regularity estimates and the two error bounds.
 *
 * Everything that scales like exp(M/sigma) is kept as a natural logarithm
 * (fields ending in `_log`); -inf encodes an exact zero.
 */
struct ConstantsReport
{
    std::size_t dim = 0;
    double sigma = 0.0;
    double radius = 0.0;
    std::size_t grid_points_per_dim = 0;
    //! Half-width of the last local refinement box.
    double grid_tolerance = 0.0;

    double M1R = 0.0;  //!< max (-V + |x|^2/2) over the ball
    double M2R = 0.0;  //!< max |x - grad V|
    double M3R = 0.0;  //!< max spectral norm of I - hess V
    double m1R = 0.0;  //!< min (-V + |x|^2/2)

    double gamma_sigma_log = 0.0;
    double xi_sigma_log = 0.0;
    double zeta_sigma_log = 0.0;
    double gamma_over_xi_log = 0.0;

    double C0_log = 0.0;
    double C1_log = 0.0;
    //! sqrt(d) C1; only shown to exist in general, this value is a convention.
    double C2_log = 0.0;

    double Csharp1_log = 0.0;
    double Csharp2_log = 0.0;
    double Cstar2_log = 0.0;
    double Csharp3_log = 0.0;
    double Csharp_sigma_log = 0.0;

    //! Radii of the volume ratio C_{tau,eps,d} = 2 Vol(B_{R*}) / Vol(B_r).
    double R_star = 0.0;
    double r_inner = 0.0;
    double C_tau_eps_d_log = 0.0;

    double tau = 0.0;
    double epsilon = 0.0;
    std::size_t K = 0;
    std::size_t m = 0;
    double failure_bound_log = 0.0;
    double w2_bound_log = 0.0;
};

/*!
 * Grid search (with local refinement) for the M-constants over the ball of
 * radius R, followed by the closed-form constants in log scale.
 *
 * Throws std::invalid_argument for dim > 3, sigma outside (0, 1], or when no
 * radius is given and the potential has no tail centred at the origin.
 */
ConstantsReport compute_constants(Potential const& p, double sigma, ConstantsOptions const& options = {});

//! log(exp(a) + exp(b)) with -inf treated as zero.
double log_add(double a, double b);

nlohmann::ordered_json to_json(ConstantsReport const& report);

}  // namespace sfs
