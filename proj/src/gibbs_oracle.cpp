#include "sfs/gibbs_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "sfs/rng.hpp"

namespace sfs {

namespace {

constexpr double kTruncationLimit = 1e-12;

double eval_log_density(Potential const& p, double sigma, double x)
{
    return -p.value(std::span<double const>(&x, 1)) / sigma;
}

double potential_at(Potential const& p, double x)
{
    return p.value(std::span<double const>(&x, 1));
}

}  // namespace

double GibbsOracle1D::normalizer() const
{
    return std::exp(log_normalizer_);
}

double GibbsOracle1D::density(double x) const
{
    return std::exp(eval_log_density(*potential_, sigma_, x) - log_normalizer_);
}

double GibbsOracle1D::cdf(double x) const
{
    if (x <= grid_.front())
    {
        return 0.0;
    }
    if (x >= grid_.back())
    {
        return 1.0;
    }
    auto const cell = std::min(static_cast<std::size_t>((x - grid_.front()) / step_), grid_.size() - 2);
    double const frac = (x - grid_[cell]) / step_;
    return cdf_[cell] + frac * (cdf_[cell + 1] - cdf_[cell]);
}

double GibbsOracle1D::quantile(double u) const
{
    if (u <= 0.0)
    {
        return grid_.front();
    }
    if (u >= 1.0)
    {
        return grid_.back();
    }
    // First node with cdf >= u; the cell to its left contains the quantile.
    auto const it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    auto const hi = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - cdf_.begin(), 1));
    std::size_t const lo = hi - 1;
    double const width = cdf_[hi] - cdf_[lo];
    double const frac = width > 0.0 ? (u - cdf_[lo]) / width : 0.0;
    return grid_[lo] + frac * step_;
}

double GibbsOracle1D::mass_between(double a, double b) const
{
    return b > a ? cdf(b) - cdf(a) : 0.0;
}

double GibbsOracle1D::tail_mass(double tau) const
{
    if (!(tau > 0.0))
    {
        throw std::invalid_argument("tail_mass requires tau > 0");
    }
    auto const& p = *potential_;
    auto weight = [&](double x) { return std::exp(eval_log_density(p, sigma_, x) - log_shift_); };
    auto simpson = [&](double a, double b) {
        return (b - a) / 6.0 * (weight(a) + 4.0 * weight(0.5 * (a + b)) + weight(b));
    };
    auto crossing = [&](double a, double b) {
        bool const a_above = potential_at(p, a) >= tau;
        for (int i = 0; i < 80; ++i)
        {
            double const mid = 0.5 * (a + b);
            if ((potential_at(p, mid) >= tau) == a_above)
            {
                a = mid;
            }
            else
            {
                b = mid;
            }
        }
        return 0.5 * (a + b);
    };

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < grid_.size(); ++i)
    {
        double const a = grid_[i];
        double const b = grid_[i + 1];
        double const mid = 0.5 * (a + b);
        bool const above_a = potential_at(p, a) >= tau;
        bool const above_m = potential_at(p, mid) >= tau;
        bool const above_b = potential_at(p, b) >= tau;
        if (above_a && above_m && above_b)
        {
            total += simpson(a, b);
        }
        else if (above_a != above_m || above_m != above_b)
        {
            // Split at up to two crossings of the level set inside the cell.
            std::vector<double> cuts{a};
            if (above_a != above_m)
            {
                cuts.push_back(crossing(a, mid));
            }
            cuts.push_back(mid);
            if (above_m != above_b)
            {
                cuts.push_back(crossing(mid, b));
            }
            cuts.push_back(b);
            for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
            {
                double const c = 0.5 * (cuts[k] + cuts[k + 1]);
                if (potential_at(p, c) >= tau)
                {
                    total += simpson(cuts[k], cuts[k + 1]);
                }
            }
        }
    }
    double const mass = std::exp(std::log(total) + log_shift_ - log_normalizer_);
    return std::clamp(mass, 0.0, 1.0);
}

double default_domain_bound(Potential const& p, double sigma)
{
    auto const tail = p.quadratic_tail();
    double const centre = tail ? std::abs(tail->center.at(0)) : 0.0;
    double const radius = tail ? tail->radius : 0.0;
    double const gaussian_reach = std::sqrt(2.0 * sigma * -std::log(1e-14)) + 1.0;
    return centre + std::max(radius, gaussian_reach);
}

GibbsOracle1D build_oracle_1d(GibbsSpec const& spec, std::size_t grid_points, std::optional<double> L)
{
    if (!spec.potential || spec.potential->dim() != 1)
    {
        throw std::invalid_argument("1-D oracle requires a one-dimensional potential");
    }
    if (!(spec.sigma > 0.0 && spec.sigma <= 1.0))
    {
        throw std::invalid_argument("sigma must lie in (0, 1]");
    }
    if (grid_points < 1000)
    {
        throw std::invalid_argument("1-D oracle needs at least 1000 grid points");
    }
    auto const& p = *spec.potential;
    double const bound = L.value_or(default_domain_bound(p, spec.sigma));

    GibbsOracle1D o;
    o.potential_ = spec.potential;
    o.sigma_ = spec.sigma;
    o.bound_ = bound;
    o.step_ = 2.0 * bound / static_cast<double>(grid_points - 1);
    o.grid_.resize(grid_points);
    o.log_density_.resize(grid_points);
    for (std::size_t i = 0; i < grid_points; ++i)
    {
        o.grid_[i] = -bound + static_cast<double>(i) * o.step_;
    }
    o.grid_.back() = bound;
    for (std::size_t i = 0; i < grid_points; ++i)
    {
        o.log_density_[i] = eval_log_density(p, spec.sigma, o.grid_[i]);
    }
    o.log_shift_ = *std::max_element(o.log_density_.begin(), o.log_density_.end());

    // Cumulative Simpson cell masses, in units of exp(log_shift).
    o.cdf_.assign(grid_points, 0.0);
    double running = 0.0;
    for (std::size_t i = 0; i + 1 < grid_points; ++i)
    {
        double const mid = 0.5 * (o.grid_[i] + o.grid_[i + 1]);
        double const fa = std::exp(o.log_density_[i] - o.log_shift_);
        double const fm = std::exp(eval_log_density(p, spec.sigma, mid) - o.log_shift_);
        double const fb = std::exp(o.log_density_[i + 1] - o.log_shift_);
        running += o.step_ / 6.0 * (fa + 4.0 * fm + fb);
        o.cdf_[i + 1] = running;
    }
    if (!(running > 0.0) || !std::isfinite(running))
    {
        throw std::runtime_error("Gibbs normalizer is not positive and finite");
    }
    for (double& c : o.cdf_)
    {
        c /= running;
    }
    o.cdf_.back() = 1.0;
    o.log_normalizer_ = std::log(running) + o.log_shift_;

    // Mass outside [-L, L] from the exact quadratic tail.
    auto const tail = p.quadratic_tail();
    if (!tail || bound < std::abs(tail->center[0]) + tail->radius)
    {
        throw std::invalid_argument("cannot bound the Gibbs tail outside [-L, L]: the domain must "
                                    "cover the potential's non-quadratic region");
    }
    double const c = tail->center[0];
    double const scale = std::sqrt(2.0 * spec.sigma);
    double const log_outside
        = 0.5 * std::log(std::numbers::pi * spec.sigma / 2.0)
          + std::log(std::erfc((bound - c) / scale) + std::erfc((bound + c) / scale));
    o.truncation_bound_ = std::exp(log_outside - o.log_normalizer_);
    if (!(o.truncation_bound_ < kTruncationLimit))
    {
        throw std::invalid_argument("Gibbs tail outside [-L, L] exceeds 1e-12; enlarge L");
    }
    return o;
}

std::vector<double> sample_oracle(GibbsOracle1D const& oracle, std::size_t n, std::uint64_t seed)
{
    CounterStream stream(seed, StreamTag::oracle);
    std::vector<double> out(n);
    for (double& x : out)
    {
        x = oracle.quantile(stream.uniform());
    }
    return out;
}

double tail_mass(GibbsOracle1D const& oracle, double tau)
{
    return oracle.tail_mass(tau);
}

std::vector<double> laplace_weights(Potential const& p)
{
    auto const& minima = p.known_minima();
    if (minima.empty())
    {
        throw std::invalid_argument("laplace_weights needs at least one known minimizer");
    }
    std::vector<double> log_w;
    log_w.reserve(minima.size());
    for (auto const& m : minima)
    {
        if (!(m.hessian_det > 0.0))
        {
            throw std::invalid_argument("Hessian determinant at a minimizer must be positive");
        }
        log_w.push_back(-0.5 * std::log(m.hessian_det));
    }
    double const top = *std::max_element(log_w.begin(), log_w.end());
    double sum = 0.0;
    for (double& w : log_w)
    {
        w = std::exp(w - top);
        sum += w;
    }
    for (double& w : log_w)
    {
        w /= sum;
    }
    return log_w;
}

}  // namespace sfs
