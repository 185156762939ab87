#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sfs/rng.hpp"
#include "sfs/samplers.hpp"

using namespace sfs;

namespace {

struct Moments
{
    double mean = 0.0;
    double var = 0.0;
};

Moments coordinate_moments(std::vector<RunResult> const& runs, std::size_t i)
{
    Moments m;
    for (auto const& r : runs)
    {
        m.mean += r.final_point[i];
    }
    m.mean /= static_cast<double>(runs.size());
    for (auto const& r : runs)
    {
        m.var += (r.final_point[i] - m.mean) * (r.final_point[i] - m.mean);
    }
    m.var /= static_cast<double>(runs.size() - 1);
    return m;
}

class NanPotential final : public Potential
{
  public:
    NanPotential() : Potential(1, "nan", {}) {}
    double value(std::span<double const>) const override { return std::numeric_limits<double>::quiet_NaN(); }
    double value_and_gradient(std::span<double const>, std::span<double> g) const override
    {
        g[0] = std::numeric_limits<double>::quiet_NaN();
        return std::numeric_limits<double>::quiet_NaN();
    }
};

}  // namespace

TEST_SUITE("samplers")
{
    TEST_CASE("standard gaussian target gives N(0, sigma I) output")
    {
        double const sigma = 0.25;
        std::size_t const n = 4000;
        SfsConfig cfg;
        cfg.sigma = sigma;
        cfg.K = 20;
        cfg.m = 10;
        for (auto form : {DriftForm::gradient, DriftForm::stein})
        {
            cfg.form = form;
            auto const runs = run_batch(make_quadratic(2, {}), cfg, n, 7, 1);
            for (std::size_t i = 0; i < 2; ++i)
            {
                auto const m = coordinate_moments(runs, i);
                CHECK(std::abs(m.mean) <= 5.0 * std::sqrt(sigma / n));
                CHECK(std::abs(m.var - sigma) <= 5.0 * sigma * std::sqrt(2.0 / n));
            }
        }
    }

    TEST_CASE("shifted quadratic target is hit in mean and variance")
    {
        double const sigma = 0.1;
        std::size_t const n = 4000;
        SfsConfig cfg;
        cfg.sigma = sigma;
        cfg.K = 50;
        cfg.m = 20;
        auto const runs = run_batch(make_quadratic(1, {1.5}), cfg, n, 8, 1);
        auto const m = coordinate_moments(runs, 0);
        CHECK(std::abs(m.mean - 1.5) <= 5.0 * std::sqrt(sigma / n));
        CHECK(std::abs(m.var - sigma) <= 5.0 * sigma * std::sqrt(2.0 / n));
    }

    TEST_CASE("each recorded step replays from its own noise")
    {
        auto p = smooth_to_quadratic_tail(make_rastrigin({0.0, 0.0, 2}), 5.0, 1.0);
        SfsConfig cfg;
        cfg.sigma = 0.3;
        cfg.K = 12;
        cfg.m = 30;
        cfg.form = DriftForm::stein;
        cfg.seed = 99;
        cfg.record_path = true;
        auto const r = run_sfs(*p, cfg);
        REQUIRE(r.path.size() == cfg.K + 1);
        CHECK(r.path.front() == Point{0.0, 0.0});
        CHECK(r.path.back() == r.final_point);
        CHECK(r.best_point == r.final_point);
        CHECK(r.final_value == p->value(r.final_point));
        CHECK(r.gaussians_consumed == 12u * 31u * 2u);
        CHECK(sfs_gaussian_budget(cfg, 2) == r.gaussians_consumed);

        DriftEstimator drift(*p, cfg.sigma, cfg.form, cfg.m);
        double const s = 1.0 / cfg.K;
        Point eps(2), b(2);
        std::vector<double> z(cfg.m * 2);
        // Replay out of order to make sure no state leaks between steps.
        for (std::size_t k : {7u, 0u, 11u, 3u})
        {
            sfs_step_noise(cfg.seed, k, eps, z);
            drift.estimate(r.path[k], static_cast<double>(k) / cfg.K, z, b);
            Point y = r.path[k];
            for (std::size_t i = 0; i < 2; ++i)
            {
                y[i] += cfg.sigma * s * b[i] + std::sqrt(cfg.sigma * s) * eps[i];
            }
            CHECK(y == r.path[k + 1]);
        }
    }

    TEST_CASE("runs are deterministic and independent of worker count")
    {
        auto p = smooth_to_quadratic_tail(make_rastrigin({0.0, 0.0, 2}), 5.0, 1.0);
        SfsConfig cfg;
        cfg.sigma = 0.05;
        cfg.K = 30;
        cfg.m = 40;
        auto const a = run_batch(p, cfg, 24, 1234, 1);
        auto const b = run_batch(p, cfg, 24, 1234, 8);
        auto const c = run_batch(p, cfg, 24, 1235, 1);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i)
        {
            CHECK(a[i].run_index == i);
            CHECK(a[i].seed_used == derive_run_seed(1234, i));
            CHECK(a[i].final_point == b[i].final_point);
            CHECK(a[i].final_value == b[i].final_value);
            CHECK(a[i].final_point != c[i].final_point);
        }

        LangevinConfig lc;
        lc.sigma = 0.05;
        lc.steps = 500;
        auto const la = run_batch(p, lc, 10, 5, 1);
        auto const lb = run_batch(p, lc, 10, 5, 3);
        for (std::size_t i = 0; i < la.size(); ++i)
        {
            CHECK(la[i].final_point == lb[i].final_point);
            CHECK(la[i].best_value == lb[i].best_value);
            CHECK(la[i].gaussians_consumed == 1000u);
        }
    }

    TEST_CASE("langevin on a quadratic has the discrete AR(1) variance")
    {
        double const sigma = 0.25, eta = 0.01;
        LangevinConfig cfg;
        cfg.sigma = sigma;
        cfg.step = eta;
        cfg.steps = 1000000;
        cfg.burn_in = 10000;
        cfg.init = Point{0.0};
        cfg.record_path = true;
        cfg.seed = 42;
        auto const r = run_langevin(*make_quadratic(1, {}), cfg);
        REQUIRE(r.path.size() == cfg.steps + 1);
        double sum = 0.0, sq = 0.0;
        std::size_t n = 0;
        for (std::size_t k = cfg.burn_in; k < r.path.size(); ++k)
        {
            sum += r.path[k][0];
            sq += r.path[k][0] * r.path[k][0];
            ++n;
        }
        double const mean = sum / n;
        double const var = sq / n - mean * mean;
        // Z' = (1 - eta) Z + sqrt(2 sigma eta) e has stationary variance sigma / (1 - eta/2).
        CHECK(std::abs(var / (sigma / (1.0 - eta / 2.0)) - 1.0) <= 0.1);
        CHECK(r.best_value <= r.final_value);
    }

    TEST_CASE("noise-free langevin is gradient descent")
    {
        auto q = make_quadratic(2, {1.0, -2.0});
        LangevinConfig cfg;
        cfg.step = 0.5;
        cfg.steps = 60;
        cfg.zero_noise = true;
        cfg.init = Point{1.0, -2.0};
        auto const fixed = run_langevin(*q, cfg);
        CHECK(fixed.final_point == Point{1.0, -2.0});
        CHECK(fixed.gaussians_consumed == 0u);

        cfg.init = Point{5.0, 5.0};
        auto const r = run_langevin(*q, cfg);
        CHECK(r.final_point[0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.final_point[1] == doctest::Approx(-2.0).epsilon(1e-12));

        // Without an explicit start the initial point is drawn from the box.
        LangevinConfig boxed;
        boxed.steps = 1;
        boxed.zero_noise = true;
        boxed.init_box = 3.0;
        boxed.record_path = true;
        for (std::uint64_t seed = 0; seed < 50; ++seed)
        {
            boxed.seed = seed;
            auto const b = run_langevin(*q, boxed);
            for (double v : b.path.front())
            {
                CHECK(std::abs(v) <= 3.0);
            }
        }
    }

    TEST_CASE("burn-in excludes early iterates from the best value")
    {
        auto q = make_quadratic(1, {});
        LangevinConfig cfg;
        cfg.step = 0.1;
        cfg.steps = 10;
        cfg.zero_noise = true;
        cfg.init = Point{-3.0};
        cfg.burn_in = 0;
        CHECK(run_langevin(*q, cfg).best_value == doctest::Approx(0.5 * std::pow(3.0 * std::pow(0.9, 10), 2)));
        cfg.init = Point{0.0};
        CHECK(run_langevin(*q, cfg).best_value == 0.0);
    }

    TEST_CASE("failures name the run and the iteration")
    {
        auto nan = std::make_shared<NanPotential>();
        SfsConfig cfg;
        cfg.K = 5;
        cfg.m = 4;
        try
        {
            run_batch(nan, cfg, 3, 1, 2);
            FAIL("expected a RunError");
        }
        catch (RunError const& e)
        {
            CHECK(e.run_index() == 0);
            std::string const msg = e.what();
            CHECK(msg.find("run 0") == 0);
            CHECK(msg.find("iteration 0") != std::string::npos);
        }

        LangevinConfig lc;
        lc.init = Point{0.0};
        CHECK_THROWS_AS(run_langevin(*nan, lc), std::domain_error);
    }

    TEST_CASE("configuration rejections")
    {
        auto q = make_quadratic(1, {});
        SfsConfig bad;
        bad.sigma = 1.5;
        CHECK_THROWS_AS(run_sfs(*q, bad), std::invalid_argument);
        bad.sigma = 0.0;
        CHECK_THROWS_AS(run_sfs(*q, bad), std::invalid_argument);
        SfsConfig k0;
        k0.K = 0;
        CHECK_THROWS_AS(run_sfs(*q, k0), std::invalid_argument);
        SfsConfig m0;
        m0.m = 0;
        CHECK_THROWS_AS(run_sfs(*q, m0), std::invalid_argument);

        LangevinConfig lc;
        lc.burn_in = lc.steps;
        CHECK_THROWS_AS(run_langevin(*q, lc), std::invalid_argument);
        LangevinConfig wrong;
        wrong.init = Point{0.0, 0.0};
        CHECK_THROWS_AS(run_langevin(*q, wrong), std::invalid_argument);
        CHECK_THROWS_AS(run_batch(q, SfsConfig{}, 0, 1), std::invalid_argument);
    }
}
