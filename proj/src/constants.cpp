#include "sfs/constants.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "sfs/diagnostics.hpp"

namespace sfs {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kRefineLevels = 5;
constexpr int kRefinePoints = 21;

struct Probe
{
    double shifted_value;  // -V + |x|^2/2
    double score_norm;     // |x - grad V|
    double curvature_gap;  // |I - hess V|_2
};

class Prober
{
  public:
    explicit Prober(Potential const& p) : p_(p), d_(p.dim()), grad_(d_), hess_(d_ * d_), work_(d_) {}

    Probe operator()(std::span<double const> x)
    {
        double const v = p_.value_and_gradient(x, grad_);
        double r2 = 0.0;
        double s2 = 0.0;
        for (std::size_t i = 0; i < d_; ++i)
        {
            r2 += x[i] * x[i];
            s2 += (x[i] - grad_[i]) * (x[i] - grad_[i]);
        }
        fill_hessian(x);
        Eigen::MatrixXd gap(d_, d_);
        for (std::size_t i = 0; i < d_; ++i)
        {
            for (std::size_t j = 0; j < d_; ++j)
            {
                // Symmetrize away finite-difference asymmetry.
                double const h = 0.5 * (hess_[i * d_ + j] + hess_[j * d_ + i]);
                gap(i, j) = (i == j ? 1.0 : 0.0) - h;
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gap, Eigen::EigenvaluesOnly);
        double const spectral = eig.eigenvalues().cwiseAbs().maxCoeff();
        return {0.5 * r2 - v, std::sqrt(s2), spectral};
    }

  private:
    void fill_hessian(std::span<double const> x)
    {
        if (p_.has_hessian())
        {
            p_.hessian(x, hess_);
            return;
        }
        std::vector<double> plus(d_), minus(d_);
        for (std::size_t j = 0; j < d_; ++j)
        {
            double const h = 1e-5 * std::max(1.0, std::abs(x[j]));
            std::copy(x.begin(), x.end(), work_.begin());
            work_[j] = x[j] + h;
            p_.value_and_gradient(work_, plus);
            work_[j] = x[j] - h;
            p_.value_and_gradient(work_, minus);
            for (std::size_t i = 0; i < d_; ++i)
            {
                hess_[i * d_ + j] = (plus[i] - minus[i]) / (2.0 * h);
            }
        }
    }

    Potential const& p_;
    std::size_t d_;
    std::vector<double> grad_;
    std::vector<double> hess_;
    std::vector<double> work_;
};

// Calls f on every point of the tensor grid with `n` points per axis on
// [lo_i, hi_i] that lies inside the closed ball of radius `radius`.
void for_each_grid_point(std::vector<double> const& lo, std::vector<double> const& hi, std::size_t n,
                         double radius, std::function<void(std::span<double const>)> const& f)
{
    std::size_t const d = lo.size();
    std::vector<std::size_t> idx(d, 0);
    std::vector<double> x(d);
    double const r2_max = radius * radius * (1.0 + 1e-12);
    while (true)
    {
        double r2 = 0.0;
        for (std::size_t i = 0; i < d; ++i)
        {
            double const t = n > 1 ? static_cast<double>(idx[i]) / static_cast<double>(n - 1) : 0.5;
            x[i] = lo[i] + t * (hi[i] - lo[i]);
            r2 += x[i] * x[i];
        }
        if (r2 <= r2_max)
        {
            f(x);
        }
        std::size_t axis = 0;
        while (axis < d && ++idx[axis] == n)
        {
            idx[axis++] = 0;
        }
        if (axis == d)
        {
            return;
        }
    }
}

struct Extremum
{
    double value;
    std::vector<double> at;
};

// Objective k in {0: max shifted, 1: max score, 2: max curvature, 3: min shifted},
// all expressed as maximization of `score`.
double score(Probe const& pr, int k)
{
    switch (k)
    {
        case 0: return pr.shifted_value;
        case 1: return pr.score_norm;
        case 2: return pr.curvature_gap;
        default: return -pr.shifted_value;
    }
}

std::vector<std::vector<double>> sphere_directions(std::size_t d)
{
    std::vector<std::vector<double>> dirs;
    if (d == 1)
    {
        dirs = {{-1.0}, {1.0}};
    }
    else if (d == 2)
    {
        constexpr int n = 1024;
        for (int i = 0; i < n; ++i)
        {
            double const a = 2.0 * std::numbers::pi * i / n;
            dirs.push_back({std::cos(a), std::sin(a)});
        }
    }
    else
    {
        // Fibonacci lattice on the 2-sphere.
        constexpr int n = 4096;
        double const golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < n; ++i)
        {
            double const z = 1.0 - 2.0 * (i + 0.5) / n;
            double const rho = std::sqrt(1.0 - z * z);
            dirs.push_back({rho * std::cos(golden * i), rho * std::sin(golden * i), z});
        }
    }
    return dirs;
}

double sphere_extreme(Potential const& p, std::vector<double> const& centre, double radius,
                      std::vector<std::vector<double>> const& dirs, bool want_max)
{
    std::vector<double> x(centre.size());
    double best = want_max ? kNegInf : std::numeric_limits<double>::infinity();
    for (auto const& u : dirs)
    {
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            x[i] = centre[i] + radius * u[i];
        }
        double const v = p.value(x);
        best = want_max ? std::max(best, v) : std::min(best, v);
    }
    return best;
}

// Largest rho on [lo, hi] such that pred holds on [lo, rho], scanning upward.
double scan_up(std::function<bool(double)> const& pred, double lo, double hi, int steps)
{
    double good = lo;
    double const h = (hi - lo) / steps;
    for (int i = 1; i <= steps; ++i)
    {
        double const rho = lo + i * h;
        if (!pred(rho))
        {
            double a = good, b = rho;
            for (int k = 0; k < 60; ++k)
            {
                double const mid = 0.5 * (a + b);
                (pred(mid) ? a : b) = mid;
            }
            return a;
        }
        good = rho;
    }
    return good;
}

// Smallest rho on [lo, hi] such that pred holds on [rho, hi], scanning downward.
double scan_down(std::function<bool(double)> const& pred, double lo, double hi, int steps)
{
    double good = hi;
    double const h = (hi - lo) / steps;
    for (int i = 1; i <= steps; ++i)
    {
        double const rho = hi - i * h;
        if (!pred(rho))
        {
            double a = rho, b = good;
            for (int k = 0; k < 60; ++k)
            {
                double const mid = 0.5 * (a + b);
                (pred(mid) ? b : a) = mid;
            }
            return b;
        }
        good = rho;
    }
    return good;
}

}  // namespace

double log_add(double a, double b)
{
    if (a == kNegInf)
    {
        return b;
    }
    if (b == kNegInf)
    {
        return a;
    }
    double const hi = std::max(a, b);
    if (std::isinf(hi))
    {
        return hi;
    }
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

ConstantsReport compute_constants(Potential const& p, double sigma, ConstantsOptions const& options)
{
    std::size_t const d = p.dim();
    if (d > 3)
    {
        throw std::invalid_argument("constants grid search supports dim <= 3");
    }
    if (!(sigma > 0.0 && sigma <= 1.0))
    {
        throw std::invalid_argument("sigma must lie in (0, 1]");
    }
    if (options.grid_points_per_dim < 3)
    {
        throw std::invalid_argument("grid_points_per_dim must be at least 3");
    }
    if (!(options.epsilon > 0.0 && options.epsilon < options.tau))
    {
        throw std::invalid_argument("bound evaluation needs 0 < epsilon < tau");
    }
    auto const radius = options.radius ? options.radius : p.origin_tail_radius();
    if (!radius)
    {
        throw std::invalid_argument("no radius given and '" + p.name()
                                    + "' has no quadratic tail centred at the origin");
    }

    ConstantsReport r;
    r.dim = d;
    r.sigma = sigma;
    r.radius = *radius;
    r.grid_points_per_dim = options.grid_points_per_dim;
    r.tau = options.tau;
    r.epsilon = options.epsilon;
    r.K = options.K;
    r.m = options.m;

    // Coarse grid over the ball, then per-objective local refinement.
    Prober probe(p);
    std::vector<Extremum> best(4, Extremum{kNegInf, std::vector<double>(d, 0.0)});
    auto visit = [&](std::span<double const> x) {
        auto const pr = probe(x);
        for (int k = 0; k < 4; ++k)
        {
            double const s = score(pr, k);
            if (s > best[k].value)
            {
                best[k].value = s;
                best[k].at.assign(x.begin(), x.end());
            }
        }
    };
    for_each_grid_point(std::vector<double>(d, -r.radius), std::vector<double>(d, r.radius),
                        options.grid_points_per_dim, r.radius, visit);

    double half_width = r.radius > 0.0 ? 2.0 * r.radius / static_cast<double>(options.grid_points_per_dim - 1)
                                       : 0.0;
    for (int level = 0; level < kRefineLevels && half_width > 0.0; ++level)
    {
        for (int k = 0; k < 4; ++k)
        {
            std::vector<double> lo(d), hi(d);
            for (std::size_t i = 0; i < d; ++i)
            {
                lo[i] = best[k].at[i] - half_width;
                hi[i] = best[k].at[i] + half_width;
            }
            for_each_grid_point(lo, hi, kRefinePoints, r.radius, [&](std::span<double const> x) {
                double const s = score(probe(x), k);
                if (s > best[k].value)
                {
                    best[k].value = s;
                    best[k].at.assign(x.begin(), x.end());
                }
            });
        }
        half_width *= 2.0 / (kRefinePoints - 1);
    }
    r.grid_tolerance = half_width;
    r.M1R = best[0].value;
    r.M2R = best[1].value;
    r.M3R = best[2].value;
    r.m1R = -best[3].value;

    // gamma = {(M2/sigma)^2 + M3/sigma} exp(M1/sigma); xi = exp(m1/sigma); zeta = exp(M1/sigma).
    double const poly = (r.M2R / sigma) * (r.M2R / sigma) + r.M3R / sigma;
    r.gamma_sigma_log = poly > 0.0 ? std::log(poly) + r.M1R / sigma : kNegInf;
    r.xi_sigma_log = r.m1R / sigma;
    r.zeta_sigma_log = r.M1R / sigma;
    double const ratio = r.gamma_sigma_log - r.xi_sigma_log;
    r.gamma_over_xi_log = ratio;

    r.C1_log = log_add(ratio, 2.0 * ratio);
    r.C0_log = r.C1_log;
    r.C2_log = 0.5 * std::log(static_cast<double>(d)) + r.C1_log;
    r.Csharp1_log = log_add(ratio, 3.0 * ratio);
    r.Csharp2_log = log_add(2.0 * ratio, r.gamma_sigma_log + r.zeta_sigma_log - 2.0 * r.xi_sigma_log);
    r.Cstar2_log = log_add(4.0 * ratio, 2.0 * r.gamma_sigma_log + 2.0 * r.zeta_sigma_log - 4.0 * r.xi_sigma_log);

    // C#3 = 2 C1 + 4 C1^2 {1 + C0 exp(2 sqrt(C0) + 1)}^{1/2}
    double const inner = r.C0_log == kNegInf ? 0.0
                                             : log_add(0.0, r.C0_log + 2.0 * std::exp(0.5 * r.C0_log) + 1.0);
    r.Csharp3_log = log_add(std::log(2.0) + r.C1_log, std::log(4.0) + 2.0 * r.C1_log + 0.5 * inner);
    // C#_sigma = exp(1/2 + 8 C2^2)
    r.Csharp_sigma_log = 0.5 + 8.0 * std::exp(2.0 * r.C2_log);

    // Volume ratio radii from the radial profile of V.
    auto const dirs = sphere_directions(d);
    double const level_radius = std::sqrt(2.0 * r.tau);
    double const outer = std::max(r.radius, level_radius) * (1.0 + 1e-9) + 1e-12;
    auto above_tau = [&](double rho) {
        return sphere_extreme(p, std::vector<double>(d, 0.0), rho, dirs, false) > r.tau;
    };
    r.R_star = scan_down(above_tau, 0.0, outer, 4000);
    std::vector<double> const centre = p.known_minima().empty() ? std::vector<double>(d, 0.0)
                                                                 : p.known_minima().front().location;
    auto below_eps = [&](double rho) { return sphere_extreme(p, centre, rho, dirs, true) < r.epsilon; };
    r.r_inner = scan_up(below_eps, 0.0, std::max(outer, 1.0), 4000);
    r.C_tau_eps_d_log = std::log(2.0) + static_cast<double>(d) * (std::log(r.R_star) - std::log(r.r_inner));

    double const s = 1.0 / static_cast<double>(r.K);
    r.failure_bound_log = evaluate_failure_bound(r, r.tau, r.epsilon, s, r.m, d);
    r.w2_bound_log = evaluate_w2_bound(r, s, r.m, d);
    return r;
}

namespace {

nlohmann::json log_field(double v)
{
    if (std::isnan(v))
    {
        return "nan";
    }
    if (std::isinf(v))
    {
        return v > 0 ? "inf" : "-inf";
    }
    return v;
}

}  // namespace

nlohmann::ordered_json to_json(ConstantsReport const& r)
{
    nlohmann::ordered_json j;
    j["dim"] = r.dim;
    j["sigma"] = r.sigma;
    j["radius"] = r.radius;
    j["grid_points_per_dim"] = r.grid_points_per_dim;
    j["grid_tolerance"] = r.grid_tolerance;
    j["M1R"] = r.M1R;
    j["M2R"] = r.M2R;
    j["M3R"] = r.M3R;
    j["m1R"] = r.m1R;
    j["gamma_sigma_log"] = log_field(r.gamma_sigma_log);
    j["xi_sigma_log"] = log_field(r.xi_sigma_log);
    j["zeta_sigma_log"] = log_field(r.zeta_sigma_log);
    j["gamma_over_xi_log"] = log_field(r.gamma_over_xi_log);
    j["C0_log"] = log_field(r.C0_log);
    j["C1_log"] = log_field(r.C1_log);
    j["C2_log"] = log_field(r.C2_log);
    j["C2_convention"] = "sqrt(d) * C1";
    j["Csharp1_log"] = log_field(r.Csharp1_log);
    j["Csharp2_log"] = log_field(r.Csharp2_log);
    j["Cstar2_log"] = log_field(r.Cstar2_log);
    j["Csharp3_log"] = log_field(r.Csharp3_log);
    j["Csharp_sigma_log"] = log_field(r.Csharp_sigma_log);
    j["R_star"] = r.R_star;
    j["r_inner"] = r.r_inner;
    j["C_tau_eps_d_log"] = log_field(r.C_tau_eps_d_log);
    j["tau"] = r.tau;
    j["epsilon"] = r.epsilon;
    j["K"] = r.K;
    j["m"] = r.m;
    j["failure_bound_log"] = log_field(r.failure_bound_log);
    j["w2_bound_log"] = log_field(r.w2_bound_log);
    return j;
}

}  // namespace sfs
