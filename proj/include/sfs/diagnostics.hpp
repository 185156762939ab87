#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sfs/constants.hpp"
#include "sfs/potentials.hpp"

namespace sfs {

struct RunResult;

//! Fraction of runs whose final value is a tau-minimizer, with a Wilson 95% interval.
struct SuccessReport
{
    double tau = 0.0;
    std::size_t n_runs = 0;
    std::size_t n_success = 0;
    double rate = 0.0;
    std::pair<double, double> wilson_interval{0.0, 1.0};
};

//! Counts final_value <= tau. Throws std::invalid_argument on empty input or tau <= 0.
SuccessReport success_rate(std::span<RunResult const> results, double tau);
SuccessReport success_rate(std::span<double const> final_values, double tau);
std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n, double z = 1.959963984540054);

enum class W2Method
{
    exact_1d,
    sliced,
};

struct W2Report
{
    double distance = 0.0;
    W2Method method = W2Method::exact_1d;
    std::size_t n_samples = 0;
    std::size_t n_projections = 0;  //!< sliced only
};

//! L2 distance between the sorted samples. Throws on length mismatch or n < 2.
W2Report w2_exact_1d(std::span<double const> a, std::span<double const> b);

/*!
 * Sliced W2 between two point clouds in R^d, d >= 2 (row-major, n x d).
 *
 * Root mean over `n_projections` random unit directions of the squared 1-D
 * W2 between the projections. Directions come from StreamTag::projections
 * under `seed`.
 */
W2Report w2_sliced(std::span<double const> a, std::span<double const> b, std::size_t d, std::size_t n_projections,
                   std::uint64_t seed);

struct ClusterMasses
{
    std::vector<double> masses;
    double remainder = 0.0;
};

//! Fraction of samples within delta_prime of each minimizer (row-major samples).
ClusterMasses cluster_masses(std::span<double const> samples, std::size_t d, std::vector<Point> const& minima,
                             double delta_prime);

struct SlopePoint
{
    double sigma = 0.0;
    double tail_mass = 0.0;
    double slope = 0.0;  //!< sigma * log(tail_mass)
};

//! sigma log mu_sigma(V >= tau) by quadrature at each sigma (decreasing, in (0, 1]).
std::vector<SlopePoint> large_deviation_slope(PotentialPtr const& p, double tau, std::span<double const> sigmas,
                                              std::size_t grid_points = 200001);

/*!
 * Log of the failure-probability bound
 *
 *   C_{tau,eps,d} exp(-(tau - eps)/sigma) + C#1 sqrt(d (2d + 3) s) + C#2 sqrt(4d / m).
 *
 * Throws std::invalid_argument unless 0 < epsilon < tau.
 */
double evaluate_failure_bound(ConstantsReport const& report, double tau, double epsilon, double s, std::size_t m,
                              std::size_t d);

//! Log of the W2 bound C#_sigma (C#3 sqrt(s) + C#2 sqrt(16 d / m)).
double evaluate_w2_bound(ConstantsReport const& report, double s, std::size_t m, std::size_t d);

nlohmann::ordered_json to_json(SuccessReport const& report);
nlohmann::ordered_json to_json(W2Report const& report);
nlohmann::ordered_json to_json(ClusterMasses const& masses);
nlohmann::ordered_json to_json(std::vector<SlopePoint> const& slopes);
//! Header "sigma,tail_mass,slope" followed by one %.17g row per point.
std::string slopes_csv(std::vector<SlopePoint> const& slopes);

}  // namespace sfs
