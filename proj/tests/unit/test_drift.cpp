#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "oracles/oracles.hpp"
#include "sfs/constants.hpp"
#include "sfs/drift.hpp"
#include "sfs/rng.hpp"

using namespace sfs;

namespace {

std::vector<double> normals(std::uint64_t seed, std::size_t n)
{
    std::vector<double> z(n);
    CounterStream s(seed, StreamTag::test);
    s.fill_gaussian(z);
    return z;
}

// Rastrigin-like 1-D potential whose shifted value sits on a 2^-40 grid,
// plus an optional constant added to V.
class Quantized final : public Potential
{
  public:
    Quantized(PotentialPtr base, double offset) : Potential(1, "quantized", {}), base_(std::move(base)), offset_(offset)
    {
    }
    double value(std::span<double const> x) const override { return base_->value(x) + offset_; }
    double value_and_gradient(std::span<double const> x, std::span<double> g) const override
    {
        return base_->value_and_gradient(x, g) + offset_;
    }
    double shifted_value_and_score(std::span<double const> x, std::span<double> score) const override
    {
        double const q = std::ldexp(std::round(std::ldexp(base_->shifted_value_and_score(x, score), 40)), -40);
        return q - offset_;
    }

  private:
    PotentialPtr base_;
    double offset_;
};

class Broken final : public Potential
{
  public:
    Broken() : Potential(1, "broken", {}) {}
    double value(std::span<double const>) const override { return std::numeric_limits<double>::quiet_NaN(); }
    double value_and_gradient(std::span<double const>, std::span<double> g) const override
    {
        g[0] = 0.0;
        return std::numeric_limits<double>::quiet_NaN();
    }
};

}  // namespace

TEST_SUITE("drift")
{
    TEST_CASE("log ratio examples")
    {
        auto r = make_rastrigin({0.0, 0.0, 1});
        auto const p = log_fhat(*r, 0.01, Point{0.5});
        CHECK(p.log_fhat == doctest::Approx(oracle::kRastriginHalfLogFhat).epsilon(1e-14));

        auto q = make_quadratic(2, {});
        auto const z = log_fhat(*q, 0.3, Point{1.7, -2.2});
        CHECK(z.log_fhat == 0.0);
        CHECK(z.score_term == Point{0.0, 0.0});
        CHECK(parse_drift_form("stein") == DriftForm::stein);
        CHECK(to_string(DriftForm::gradient) == "gradient");
        CHECK_THROWS_AS(parse_drift_form("Stein"), std::invalid_argument);
    }

    TEST_CASE("standard gaussian target has zero drift")
    {
        auto q = make_quadratic(2, {});
        std::size_t const m = 500;
        auto const z = normals(1, m * 2);

        auto g = estimate_drift(*q, 0.2, Point{0.4, -1.0}, 0.3, m, DriftForm::gradient, z);
        CHECK(g == Point{0.0, 0.0});

        // Uniform weights: the Stein form is the plain sample mean of Z over the cloud scale.
        auto s = estimate_drift(*q, 0.2, Point{0.4, -1.0}, 0.3, m, DriftForm::stein, z);
        double const scale = std::sqrt(0.7 * 0.2);
        for (std::size_t i = 0; i < 2; ++i)
        {
            double mean = 0.0;
            for (std::size_t j = 0; j < m; ++j)
            {
                mean += z[j * 2 + i];
            }
            mean /= static_cast<double>(m);
            CHECK(s[i] == doctest::Approx(mean / scale).epsilon(1e-13).scale(1.0));
        }
    }

    TEST_CASE("gradient form is exact on a shifted quadratic")
    {
        Point const a{1.0, -0.5, 3.25};
        auto q = make_quadratic(3, a);
        std::size_t const m = 64;
        auto const z = normals(2, m * 3);
        for (double sigma : {1.0, 0.3, 0.01})
        {
            for (double t : {0.0, 0.5, 0.99})
            {
                auto b = estimate_drift(*q, sigma, Point{2.0, 0.1, -7.0}, t, m, DriftForm::gradient, z);
                CHECK(b == exact_drift_quadratic(a, sigma));
            }
        }
        CHECK(exact_drift_quadratic(Point{1.0}, 0.5) == Point{2.0});
    }

    TEST_CASE("stein form converges on a shifted quadratic")
    {
        double const a = 1.0, sigma = 0.5, t = 0.5;
        std::size_t const m = 100000;
        auto q = make_quadratic(1, {a});
        auto const z = normals(3, m);
        DriftEstimator est(*q, sigma, DriftForm::stein, m);
        Point b(1);
        est.estimate(Point{0.0}, t, z, b);
        // Self-normalised importance sampling: relative variance exp((1 - t) a^2 / sigma) - 1.
        double const tol = 3.0 * std::sqrt(std::exp((1.0 - t) * a * a / sigma) / m) / std::sqrt((1.0 - t) * sigma);
        CHECK(std::abs(b[0] - a / sigma) <= tol);
        CHECK(est.standard_error(b)[0] < tol);
        CHECK(est.effective_sample_size() > 0.2 * m);
        CHECK(est.effective_sample_size() <= m);
    }

    TEST_CASE("softmax weights form a convex combination")
    {
        // One-hot rows read off the weights directly.
        std::vector<double> const lw{0.3, -1.2, 2.0, 0.0};
        std::vector<double> rows(16, 0.0);
        for (std::size_t j = 0; j < 4; ++j)
        {
            rows[j * 4 + j] = 1.0;
        }
        std::vector<double> w(4);
        softmax_average(lw, rows, 4, w);
        CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
        double const total = std::exp(0.3) + std::exp(-1.2) + std::exp(2.0) + 1.0;
        CHECK(w[2] == doctest::Approx(std::exp(2.0) / total).epsilon(1e-14));

        // Very negative weights are fine as long as one is finite.
        std::vector<double> const far{-1e6, -1e6 - 1.0};
        std::vector<double> two{1.0, 3.0};
        std::vector<double> out(1);
        softmax_average(far, two, 1, out);
        CHECK(out[0] == doctest::Approx((1.0 + 3.0 * std::exp(-1.0)) / (1.0 + std::exp(-1.0))));

        std::vector<double> const none{-HUGE_VAL, -HUGE_VAL};
        CHECK_THROWS_AS(softmax_average(none, two, 1, out), std::domain_error);
    }

    TEST_CASE("adding a constant to V leaves the drift unchanged")
    {
        auto base = make_rastrigin({0.0, 0.0, 1});
        Quantized plain(base, 0.0), lifted(base, 1000.0);
        std::size_t const m = 256;
        auto const z = normals(4, m);
        for (auto form : {DriftForm::gradient, DriftForm::stein})
        {
            for (double x : {-0.7, 0.0, 0.45, 2.2})
            {
                auto b0 = estimate_drift(plain, 0.5, Point{x}, 0.25, m, form, z);
                auto b1 = estimate_drift(lifted, 0.5, Point{x}, 0.25, m, form, z);
                CHECK(b0 == b1);
            }
        }
    }

    TEST_CASE("drift stays inside its regularity bound")
    {
        double const sigma = 0.5;
        auto p = smooth_to_quadratic_tail(make_rastrigin({0.0, 0.0, 1}), 5.0, 1.0);
        auto const r = compute_constants(*p, sigma);
        std::size_t const m = 200;
        DriftEstimator est(*p, sigma, DriftForm::gradient, m);
        Point b(1);
        CounterStream s(5, StreamTag::test);
        double worst = 0.0;
        for (int k = 0; k < 400; ++k)
        {
            auto const z = normals(100 + k, m);
            double const x = 16.0 * s.uniform() - 8.0;
            double const t = 0.99 * s.uniform();
            est.estimate(Point{x}, t, z, b);
            worst = std::max(worst, std::abs(b[0]));
        }
        // Every row is a score over sigma, so the average is too.
        CHECK(worst <= r.M2R / sigma * (1.0 + 1e-9));
        CHECK(std::log(worst) <= r.gamma_over_xi_log);
    }

    TEST_CASE("rejections")
    {
        auto q = make_quadratic(1, {});
        auto const z = normals(6, 8);
        Point out(1);
        DriftEstimator est(*q, 0.5, DriftForm::stein, 8);
        CHECK_THROWS_AS(est.estimate(Point{0.0}, 1.0, z, out), std::invalid_argument);
        CHECK_THROWS_AS(est.estimate(Point{0.0}, -0.1, z, out), std::invalid_argument);
        CHECK_THROWS_AS(est.estimate(Point{0.0}, 0.0, std::span<double const>(z).first(7), out), std::invalid_argument);
        CHECK_THROWS_AS(DriftEstimator(*q, 0.5, DriftForm::stein, 0), std::invalid_argument);
        CHECK_THROWS_AS(DriftEstimator(*q, 0.0, DriftForm::stein, 4), std::invalid_argument);

        Broken broken;
        CHECK_THROWS_AS(estimate_drift(broken, 0.5, Point{0.0}, 0.0, 8, DriftForm::gradient, z), std::domain_error);
        CHECK_THROWS_AS(log_fhat(broken, 0.5, Point{0.0}), std::domain_error);
    }
}
