#include "sfs/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sfs/format.hpp"
#include "sfs/gibbs_oracle.hpp"
#include "sfs/rng.hpp"
#include "sfs/samplers.hpp"

namespace sfs {

std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n, double z)
{
    if (n == 0)
    {
        return {0.0, 1.0};
    }
    double const nn = static_cast<double>(n);
    double const p = static_cast<double>(successes) / nn;
    double const z2 = z * z;
    double const denom = 1.0 + z2 / nn;
    double const centre = (p + z2 / (2.0 * nn)) / denom;
    double const half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

SuccessReport success_rate(std::span<double const> final_values, double tau)
{
    if (final_values.empty())
    {
        throw std::invalid_argument("success_rate needs at least one run");
    }
    if (!(tau > 0.0))
    {
        throw std::invalid_argument("tau must be positive");
    }
    SuccessReport r;
    r.tau = tau;
    r.n_runs = final_values.size();
    r.n_success = static_cast<std::size_t>(
        std::count_if(final_values.begin(), final_values.end(), [tau](double v) { return v <= tau; }));
    r.rate = static_cast<double>(r.n_success) / static_cast<double>(r.n_runs);
    r.wilson_interval = wilson_interval(r.n_success, r.n_runs);
    return r;
}

SuccessReport success_rate(std::span<RunResult const> results, double tau)
{
    std::vector<double> values;
    values.reserve(results.size());
    for (auto const& r : results)
    {
        values.push_back(r.final_value);
    }
    return success_rate(values, tau);
}

namespace {

double sorted_w2_squared(std::vector<double>& a, std::vector<double>& b)
{
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        double const diff = a[i] - b[i];
        acc += diff * diff;
    }
    return acc / static_cast<double>(a.size());
}

}  // namespace

W2Report w2_exact_1d(std::span<double const> a, std::span<double const> b)
{
    if (a.size() != b.size())
    {
        throw std::invalid_argument("w2_exact_1d needs equal sample counts");
    }
    if (a.size() < 2)
    {
        throw std::invalid_argument("w2_exact_1d needs at least 2 samples");
    }
    std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    return {std::sqrt(sorted_w2_squared(sa, sb)), W2Method::exact_1d, a.size(), 0};
}

W2Report w2_sliced(std::span<double const> a, std::span<double const> b, std::size_t d, std::size_t n_projections,
                   std::uint64_t seed)
{
    if (d < 2)
    {
        throw std::invalid_argument("w2_sliced needs d >= 2; use w2_exact_1d");
    }
    if (n_projections < 16)
    {
        throw std::invalid_argument("w2_sliced needs at least 16 projections");
    }
    if (a.size() % d != 0 || b.size() % d != 0)
    {
        throw std::invalid_argument("sample buffer is not a multiple of d");
    }
    if (a.size() != b.size())
    {
        throw std::invalid_argument("w2_sliced needs equal sample counts");
    }
    std::size_t const n = a.size() / d;
    if (n < 2)
    {
        throw std::invalid_argument("w2_sliced needs at least 2 samples");
    }

    CounterStream dirs(seed, StreamTag::projections);
    std::vector<double> u(d), pa(n), pb(n);
    double acc = 0.0;
    for (std::size_t k = 0; k < n_projections; ++k)
    {
        double norm = 0.0;
        do
        {
            dirs.fill_gaussian(u);
            norm = 0.0;
            for (double v : u)
            {
                norm += v * v;
            }
        } while (norm == 0.0);
        norm = std::sqrt(norm);
        for (double& v : u)
        {
            v /= norm;
        }
        for (std::size_t j = 0; j < n; ++j)
        {
            double xa = 0.0, xb = 0.0;
            for (std::size_t i = 0; i < d; ++i)
            {
                xa += u[i] * a[j * d + i];
                xb += u[i] * b[j * d + i];
            }
            pa[j] = xa;
            pb[j] = xb;
        }
        acc += sorted_w2_squared(pa, pb);
    }
    return {std::sqrt(acc / static_cast<double>(n_projections)), W2Method::sliced, n, n_projections};
}

ClusterMasses cluster_masses(std::span<double const> samples, std::size_t d, std::vector<Point> const& minima,
                             double delta_prime)
{
    if (d == 0 || samples.size() % d != 0 || samples.empty())
    {
        throw std::invalid_argument("cluster_masses needs a non-empty n x d sample buffer");
    }
    if (!(delta_prime > 0.0))
    {
        throw std::invalid_argument("delta_prime must be positive");
    }
    for (auto const& x : minima)
    {
        if (x.size() != d)
        {
            throw std::invalid_argument("minimizer has the wrong dimension");
        }
    }
    auto dist2 = [d](double const* x, double const* y) {
        double acc = 0.0;
        for (std::size_t i = 0; i < d; ++i)
        {
            acc += (x[i] - y[i]) * (x[i] - y[i]);
        }
        return acc;
    };
    for (std::size_t i = 0; i < minima.size(); ++i)
    {
        for (std::size_t j = i + 1; j < minima.size(); ++j)
        {
            if (std::sqrt(dist2(minima[i].data(), minima[j].data())) < 2.0 * delta_prime)
            {
                throw std::invalid_argument("cluster balls of radius delta_prime overlap");
            }
        }
    }

    std::size_t const n = samples.size() / d;
    std::vector<std::size_t> counts(minima.size(), 0);
    std::size_t rest = 0;
    double const r2 = delta_prime * delta_prime;
    for (std::size_t j = 0; j < n; ++j)
    {
        double const* x = samples.data() + j * d;
        bool hit = false;
        for (std::size_t i = 0; i < minima.size(); ++i)
        {
            if (dist2(x, minima[i].data()) < r2)
            {
                ++counts[i];
                hit = true;
                break;
            }
        }
        if (!hit)
        {
            ++rest;
        }
    }
    ClusterMasses out;
    for (auto c : counts)
    {
        out.masses.push_back(static_cast<double>(c) / static_cast<double>(n));
    }
    out.remainder = static_cast<double>(rest) / static_cast<double>(n);
    return out;
}

std::vector<SlopePoint> large_deviation_slope(PotentialPtr const& p, double tau, std::span<double const> sigmas,
                                              std::size_t grid_points)
{
    if (!(tau > 0.0))
    {
        throw std::invalid_argument("tau must be positive");
    }
    for (std::size_t i = 0; i < sigmas.size(); ++i)
    {
        if (!(sigmas[i] > 0.0 && sigmas[i] <= 1.0))
        {
            throw std::invalid_argument("every sigma must lie in (0, 1]");
        }
        if (i > 0 && !(sigmas[i] < sigmas[i - 1]))
        {
            throw std::invalid_argument("sigmas must be strictly decreasing");
        }
    }
    std::vector<SlopePoint> out;
    for (double sigma : sigmas)
    {
        auto const oracle = build_oracle_1d({p, sigma}, grid_points);
        double const mass = oracle.tail_mass(tau);
        out.push_back({sigma, mass, sigma * std::log(mass)});
    }
    return out;
}

double evaluate_failure_bound(ConstantsReport const& r, double tau, double epsilon, double s, std::size_t m,
                              std::size_t d)
{
    if (!(epsilon > 0.0 && epsilon < tau))
    {
        throw std::invalid_argument("bound evaluation needs 0 < epsilon < tau");
    }
    if (!(s > 0.0) || m == 0 || d == 0)
    {
        throw std::invalid_argument("bound evaluation needs s > 0, m >= 1, d >= 1");
    }
    double const dd = static_cast<double>(d);
    double const volume_term = r.C_tau_eps_d_log - (tau - epsilon) / r.sigma;
    double const step_term = r.Csharp1_log + 0.5 * std::log(dd * (2.0 * dd + 3.0) * s);
    double const sample_term = r.Csharp2_log + 0.5 * std::log(4.0 * dd / static_cast<double>(m));
    return log_add(volume_term, log_add(step_term, sample_term));
}

double evaluate_w2_bound(ConstantsReport const& r, double s, std::size_t m, std::size_t d)
{
    if (!(s > 0.0) || m == 0 || d == 0)
    {
        throw std::invalid_argument("bound evaluation needs s > 0, m >= 1, d >= 1");
    }
    double const dd = static_cast<double>(d);
    double const step_term = r.Csharp3_log + 0.5 * std::log(s);
    double const sample_term = r.Csharp2_log + 0.5 * std::log(16.0 * dd / static_cast<double>(m));
    return r.Csharp_sigma_log + log_add(step_term, sample_term);
}

nlohmann::ordered_json to_json(SuccessReport const& r)
{
    nlohmann::ordered_json j;
    j["tau"] = r.tau;
    j["n_runs"] = r.n_runs;
    j["n_success"] = r.n_success;
    j["rate"] = r.rate;
    j["wilson_interval"] = {r.wilson_interval.first, r.wilson_interval.second};
    return j;
}

nlohmann::ordered_json to_json(W2Report const& r)
{
    nlohmann::ordered_json j;
    j["distance"] = r.distance;
    j["method"] = r.method == W2Method::exact_1d ? "exact_1d" : "sliced";
    j["n_samples"] = r.n_samples;
    if (r.method == W2Method::sliced)
    {
        j["n_projections"] = r.n_projections;
    }
    return j;
}

nlohmann::ordered_json to_json(ClusterMasses const& c)
{
    nlohmann::ordered_json j;
    j["masses"] = c.masses;
    j["remainder"] = c.remainder;
    return j;
}

nlohmann::ordered_json to_json(std::vector<SlopePoint> const& slopes)
{
    auto j = nlohmann::ordered_json::array();
    for (auto const& s : slopes)
    {
        nlohmann::ordered_json row;
        row["sigma"] = s.sigma;
        row["tail_mass"] = s.tail_mass;
        row["slope"] = s.slope;
        j.push_back(row);
    }
    return j;
}

std::string slopes_csv(std::vector<SlopePoint> const& slopes)
{
    std::string out = "sigma,tail_mass,slope\n";
    for (auto const& s : slopes)
    {
        out += format_double(s.sigma) + "," + format_double(s.tail_mass) + "," + format_double(s.slope) + "\n";
    }
    return out;
}

}  // namespace sfs
