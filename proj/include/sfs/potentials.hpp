#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sfs {

using Point = std::vector<double>;

//! A global minimizer together with det of the Hessian there.
struct KnownMinimum
{
    Point location;
    double hessian_det = 0.0;
};

//! V(x) = |x - center|^2 / 2 whenever |x - center| >= radius.
struct QuadraticTail
{
    Point center;
    double radius = 0.0;
};

/*!
 * Twice-differentiable objective V on R^d.
 *
 * Potentials are immutable after construction and shared through
 * PotentialPtr. The minimum value is always normalized to 0.
 */
class Potential
{
  public:
    virtual ~Potential() = default;

    std::size_t dim() const { return dim_; }
    std::string const& name() const { return name_; }

    virtual double value(std::span<double const> x) const = 0;
    //! Writes grad V(x) into `grad` and returns V(x).
    virtual double value_and_gradient(std::span<double const> x, std::span<double> grad) const = 0;
    Point gradient(std::span<double const> x) const;

    /*!
     * Writes x - grad V(x) into `score` and returns |x|^2/2 - V(x).
     *
     * These are sigma times the log density ratio against N(0, sigma I) and
     * its gradient. Overrides return them in closed form where that avoids
     * cancellation (both are exactly 0 on the quadratic tail).
     */
    virtual double shifted_value_and_score(std::span<double const> x, std::span<double> score) const;

    virtual bool has_hessian() const { return false; }
    //! Row-major d x d Hessian. Throws std::logic_error when unavailable.
    virtual void hessian(std::span<double const> x, std::span<double> out) const;

    std::vector<KnownMinimum> const& known_minima() const { return minima_; }
    double min_value() const { return 0.0; }

    virtual std::optional<QuadraticTail> quadratic_tail() const { return std::nullopt; }
    //! Radius outside which V(x) = |x|^2/2 exactly, if the tail is centred at 0.
    std::optional<double> origin_tail_radius() const;

  protected:
    Potential(std::size_t dim, std::string name, std::vector<KnownMinimum> minima);

  private:
    std::size_t dim_;
    std::string name_;
    std::vector<KnownMinimum> minima_;
};

using PotentialPtr = std::shared_ptr<Potential const>;

struct RastriginParams
{
    double B = 0.0;
    double C = 0.0;
    std::size_t dim = 1;
};

//! V(x) = |x - a|^2 / 2, so the Gibbs measure is N(a, sigma I).
PotentialPtr make_quadratic(std::size_t dim, Point shift);

//! (1/d) sum_i [(x_i - B)^2 - 10 cos(2 pi (x_i - B)) + 10] + C, shifted so min is 0.
PotentialPtr make_rastrigin(RastriginParams const& params);
double default_rastrigin_radius(RastriginParams const& params);

/*!
 * Blend `p` into |x|^2/2 across the shell R <= |x| <= R + delta.
 *
 * W(x) = V(x) + w(r) (|x|^2/2 - V(x)) with the C^2 smoothstep
 * w = 6u^5 - 15u^4 + 10u^3, u = clamp((|x| - R) / delta, 0, 1).
 * Throws std::invalid_argument if a known minimizer is not strictly inside
 * the ball of radius R.
 */
PotentialPtr smooth_to_quadratic_tail(PotentialPtr p, double R, double delta);
PotentialPtr smooth_to_quadratic_tail(PotentialPtr p, double R);

/*!
 * One-dimensional double well with global minima at -1 and +1.
 *
 * V(x) = k(x) g(x) with g(x) = (x^2 - 1)^2 / (2 (1 + x^2)), g''(+-1) = 2.
 * The coefficient k equals c1/2 left of -0.9, c2/2 right of 0.9 and blends
 * back to 1 over 1.5 <= |x| <= 3.5, so V''(-1) = c1, V''(1) = c2 and the
 * far field is within O(1) of x^2/2.
 */
PotentialPtr make_double_well_1d(double c1, double c2);
//! Smoothing radius used for the double well when none is configured.
inline constexpr double kDoubleWellRadius = 4.0;

}  // namespace sfs
