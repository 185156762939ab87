#include "sfs/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace sfs {

namespace {

constexpr double kPi = std::numbers::pi;

double squared_norm(std::span<double const> x)
{
    double s = 0.0;
    for (double v : x)
    {
        s += v * v;
    }
    return s;
}

// Quintic smoothstep and its first two derivatives in u.
struct Smoothstep
{
    double value, d1, d2;
};

Smoothstep smoothstep(double u)
{
    if (u <= 0.0)
    {
        return {0.0, 0.0, 0.0};
    }
    if (u >= 1.0)
    {
        return {1.0, 0.0, 0.0};
    }
    double const u2 = u * u;
    return {u2 * u * (10.0 - 15.0 * u + 6.0 * u2), 30.0 * u2 * (u - 1.0) * (u - 1.0),
            60.0 * u * (2.0 * u - 1.0) * (u - 1.0)};
}

//---------------------------------------------------------------------------//
class QuadraticPotential final : public Potential
{
  public:
    QuadraticPotential(std::size_t dim, Point shift)
        : Potential(dim, "quadratic", {KnownMinimum{shift, 1.0}}), shift_(std::move(shift))
    {
    }

    double value(std::span<double const> x) const override
    {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            double const dx = x[i] - shift_[i];
            s += dx * dx;
        }
        return 0.5 * s;
    }

    double value_and_gradient(std::span<double const> x, std::span<double> grad) const override
    {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            double const dx = x[i] - shift_[i];
            grad[i] = dx;
            s += dx * dx;
        }
        return 0.5 * s;
    }

    // |x|^2/2 - |x - a|^2/2 = <x, a> - |a|^2/2 and x - grad V = a.
    double shifted_value_and_score(std::span<double const> x, std::span<double> score) const override
    {
        double dot = 0.0;
        double aa = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            dot += x[i] * shift_[i];
            aa += shift_[i] * shift_[i];
            score[i] = shift_[i];
        }
        return dot - 0.5 * aa;
    }

    bool has_hessian() const override { return true; }

    void hessian(std::span<double const> x, std::span<double> out) const override
    {
        std::size_t const d = x.size();
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t i = 0; i < d; ++i)
        {
            out[i * d + i] = 1.0;
        }
    }

    std::optional<QuadraticTail> quadratic_tail() const override
    {
        return QuadraticTail{shift_, 0.0};
    }

  private:
    Point shift_;
};

//---------------------------------------------------------------------------//
class RastriginPotential final : public Potential
{
  public:
    explicit RastriginPotential(RastriginParams const& p)
        : Potential(p.dim, "rastrigin",
                    {KnownMinimum{Point(p.dim, p.B),
                                  std::pow((2.0 + 40.0 * kPi * kPi) / static_cast<double>(p.dim),
                                           static_cast<double>(p.dim))}})
        , params_(p)
        , inv_dim_(1.0 / static_cast<double>(p.dim))
    {
    }

    // The offset C is the raw minimum, so normalization removes it exactly.
    double value(std::span<double const> x) const override
    {
        double s = 0.0;
        for (double xi : x)
        {
            double const z = xi - params_.B;
            s += z * z - 10.0 * std::cos(2.0 * kPi * z) + 10.0;
        }
        return inv_dim_ * s;
    }

    double value_and_gradient(std::span<double const> x, std::span<double> grad) const override
    {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            double const z = x[i] - params_.B;
            double const angle = 2.0 * kPi * z;
            s += z * z - 10.0 * std::cos(angle) + 10.0;
            grad[i] = inv_dim_ * (2.0 * z + 20.0 * kPi * std::sin(angle));
        }
        return inv_dim_ * s;
    }

    bool has_hessian() const override { return true; }

    void hessian(std::span<double const> x, std::span<double> out) const override
    {
        std::size_t const d = x.size();
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t i = 0; i < d; ++i)
        {
            double const z = x[i] - params_.B;
            out[i * d + i] = inv_dim_ * (2.0 + 40.0 * kPi * kPi * std::cos(2.0 * kPi * z));
        }
    }

  private:
    RastriginParams params_;
    double inv_dim_;
};

//---------------------------------------------------------------------------//
class DoubleWell final : public Potential
{
  public:
    DoubleWell(double c1, double c2)
        : Potential(1, "double_well", {KnownMinimum{{-1.0}, c1}, KnownMinimum{{1.0}, c2}})
        , left_(0.5 * c1)
        , right_(0.5 * c2)
    {
    }

    double value(std::span<double const> x) const override
    {
        return eval(x[0]).v;
    }

    double value_and_gradient(std::span<double const> x, std::span<double> grad) const override
    {
        auto const e = eval(x[0]);
        grad[0] = e.d1;
        return e.v;
    }

    bool has_hessian() const override { return true; }

    void hessian(std::span<double const> x, std::span<double> out) const override
    {
        out[0] = eval(x[0]).d2;
    }

  private:
    static constexpr double kSideHalfWidth = 0.9;
    static constexpr double kBumpStart = 1.5;
    static constexpr double kBumpWidth = 2.0;

    struct Eval
    {
        double v, d1, d2;
    };

    Eval eval(double x) const
    {
        // Side coefficient: left_ -> right_ across [-0.9, 0.9].
        double const side_scale = 1.0 / (2.0 * kSideHalfWidth);
        auto const s = smoothstep((x + kSideHalfWidth) * side_scale);
        double const jump = right_ - left_;
        double const side = left_ + jump * s.value;
        double const side1 = jump * s.d1 * side_scale;
        double const side2 = jump * s.d2 * side_scale * side_scale;

        // Bump: 1 for |x| <= 1.5, 0 for |x| >= 3.5.
        double const sign = x < 0.0 ? -1.0 : 1.0;
        auto const b = smoothstep((std::abs(x) - kBumpStart) / kBumpWidth);
        double const bump = 1.0 - b.value;
        double const bump1 = -sign * b.d1 / kBumpWidth;
        double const bump2 = -b.d2 / (kBumpWidth * kBumpWidth);

        double const k = 1.0 + (side - 1.0) * bump;
        double const k1 = side1 * bump + (side - 1.0) * bump1;
        double const k2 = side2 * bump + 2.0 * side1 * bump1 + (side - 1.0) * bump2;

        double const x2 = x * x;
        double const q = 1.0 + x2;
        double const g = (x2 - 1.0) * (x2 - 1.0) / (2.0 * q);
        double const g1 = x * (x2 - 1.0) * (x2 + 3.0) / (q * q);
        double const g2 = (x2 * x2 * x2 + 3.0 * x2 * x2 + 15.0 * x2 - 3.0) / (q * q * q);

        return {k * g, k1 * g + k * g1, k2 * g + 2.0 * k1 * g1 + k * g2};
    }

    double left_;
    double right_;
};

//---------------------------------------------------------------------------//
class SmoothedPotential final : public Potential
{
  public:
    SmoothedPotential(PotentialPtr base, double R, double delta)
        : Potential(base->dim(), base->name(), base->known_minima())
        , base_(std::move(base))
        , inner_(R)
        , delta_(delta)
        , outer_(R + delta)
    {
    }

    double value(std::span<double const> x) const override
    {
        double const r2 = squared_norm(x);
        if (r2 >= outer_ * outer_)
        {
            return 0.5 * r2;
        }
        double const v = base_->value(x);
        if (r2 <= inner_ * inner_)
        {
            return v;
        }
        double const w = smoothstep((std::sqrt(r2) - inner_) / delta_).value;
        return v + w * (0.5 * r2 - v);
    }

    double value_and_gradient(std::span<double const> x, std::span<double> grad) const override
    {
        double const r2 = squared_norm(x);
        if (r2 >= outer_ * outer_)
        {
            std::copy(x.begin(), x.end(), grad.begin());
            return 0.5 * r2;
        }
        double const v = base_->value_and_gradient(x, grad);
        if (r2 <= inner_ * inner_)
        {
            return v;
        }
        double const r = std::sqrt(r2);
        auto const w = smoothstep((r - inner_) / delta_);
        double const gap = 0.5 * r2 - v;
        double const radial = gap * w.d1 / (delta_ * r);
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            grad[i] += w.value * (x[i] - grad[i]) + radial * x[i];
        }
        return v + w.value * gap;
    }

    double shifted_value_and_score(std::span<double const> x, std::span<double> score) const override
    {
        if (squared_norm(x) >= outer_ * outer_)
        {
            std::fill(score.begin(), score.end(), 0.0);
            return 0.0;
        }
        return Potential::shifted_value_and_score(x, score);
    }

    bool has_hessian() const override { return base_->has_hessian(); }

    void hessian(std::span<double const> x, std::span<double> out) const override
    {
        std::size_t const d = x.size();
        double const r2 = squared_norm(x);
        if (r2 >= outer_ * outer_)
        {
            std::fill(out.begin(), out.end(), 0.0);
            for (std::size_t i = 0; i < d; ++i)
            {
                out[i * d + i] = 1.0;
            }
            return;
        }
        base_->hessian(x, out);
        if (r2 <= inner_ * inner_)
        {
            return;
        }
        // W = V + w(r) D with D = |x|^2/2 - V.
        Point grad(d);
        double const v = base_->value_and_gradient(x, grad);
        double const r = std::sqrt(r2);
        auto const w = smoothstep((r - inner_) / delta_);
        double const w1 = w.d1 / delta_;
        double const w2 = w.d2 / (delta_ * delta_);
        double const gap = 0.5 * r2 - v;
        for (std::size_t i = 0; i < d; ++i)
        {
            double const dgap_i = x[i] - grad[i];
            double const dw_i = w1 * x[i] / r;
            for (std::size_t j = 0; j < d; ++j)
            {
                double const dgap_j = x[j] - grad[j];
                double const dw_j = w1 * x[j] / r;
                double const eye = i == j ? 1.0 : 0.0;
                double const hess_w = w2 * x[i] * x[j] / r2 + w1 * (eye / r - x[i] * x[j] / (r2 * r));
                double& h = out[i * d + j];
                h += w.value * (eye - h) + dw_i * dgap_j + dgap_i * dw_j + gap * hess_w;
            }
        }
    }

    std::optional<QuadraticTail> quadratic_tail() const override
    {
        return QuadraticTail{Point(dim(), 0.0), outer_};
    }

  private:
    PotentialPtr base_;
    double inner_;
    double delta_;
    double outer_;
};

}  // namespace

//---------------------------------------------------------------------------//
Potential::Potential(std::size_t dim, std::string name, std::vector<KnownMinimum> minima)
    : dim_(dim), name_(std::move(name)), minima_(std::move(minima))
{
    if (dim_ == 0)
    {
        throw std::invalid_argument("potential dimension must be at least 1");
    }
}

Point Potential::gradient(std::span<double const> x) const
{
    Point g(x.size());
    value_and_gradient(x, g);
    return g;
}

double Potential::shifted_value_and_score(std::span<double const> x, std::span<double> score) const
{
    double const v = value_and_gradient(x, score);
    double r2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        r2 += x[i] * x[i];
        score[i] = x[i] - score[i];
    }
    return 0.5 * r2 - v;
}

void Potential::hessian(std::span<double const>, std::span<double>) const
{
    throw std::logic_error("potential '" + name_ + "' has no analytic Hessian");
}

std::optional<double> Potential::origin_tail_radius() const
{
    auto const tail = quadratic_tail();
    if (!tail)
    {
        return std::nullopt;
    }
    for (double c : tail->center)
    {
        if (c != 0.0)
        {
            return std::nullopt;
        }
    }
    return tail->radius;
}

PotentialPtr make_quadratic(std::size_t dim, Point shift)
{
    if (shift.empty())
    {
        shift.assign(dim, 0.0);
    }
    if (shift.size() != dim)
    {
        throw std::invalid_argument("quadratic shift has wrong dimension");
    }
    return std::make_shared<QuadraticPotential>(dim, std::move(shift));
}

PotentialPtr make_rastrigin(RastriginParams const& params)
{
    return std::make_shared<RastriginPotential>(params);
}

double default_rastrigin_radius(RastriginParams const& params)
{
    return 5.0 * (1.0 + std::abs(params.B));
}

PotentialPtr smooth_to_quadratic_tail(PotentialPtr p, double R, double delta)
{
    if (!(R > 0.0) || !(delta > 0.0))
    {
        throw std::invalid_argument("smoothing radius and blend width must be positive");
    }
    for (auto const& m : p->known_minima())
    {
        if (std::sqrt(squared_norm(m.location)) >= R)
        {
            throw std::invalid_argument("known minimizer of '" + p->name()
                                        + "' lies outside the smoothing radius");
        }
    }
    return std::make_shared<SmoothedPotential>(std::move(p), R, delta);
}

PotentialPtr smooth_to_quadratic_tail(PotentialPtr p, double R)
{
    return smooth_to_quadratic_tail(std::move(p), R, R / 5.0);
}

PotentialPtr make_double_well_1d(double c1, double c2)
{
    if (!(c1 > 0.0) || !(c2 > 0.0))
    {
        throw std::invalid_argument("double well curvatures must be positive");
    }
    return std::make_shared<DoubleWell>(c1, c2);
}

}  // namespace sfs
