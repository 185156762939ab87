#include "sfs/samplers.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "sfs/rng.hpp"

namespace sfs {

namespace {

bool all_finite(std::span<double const> v)
{
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

RunError::RunError(std::size_t run_index, std::string const& what)
    : std::runtime_error("run " + std::to_string(run_index) + ": " + what)
    , run_index_(run_index)
{
}

void validate(SfsConfig const& cfg)
{
    if (!(cfg.sigma > 0.0 && cfg.sigma <= 1.0))
    {
        throw std::invalid_argument("sigma must lie in (0, 1]");
    }
    if (cfg.K == 0 || cfg.K > 0xffffffffu)
    {
        throw std::invalid_argument("K must lie in [1, 2^32)");
    }
    if (cfg.m == 0)
    {
        throw std::invalid_argument("m must be at least 1");
    }
}

void validate(LangevinConfig const& cfg)
{
    if (!(cfg.sigma > 0.0 && std::isfinite(cfg.sigma)))
    {
        throw std::invalid_argument("sigma must be positive");
    }
    if (!(cfg.step > 0.0 && std::isfinite(cfg.step)))
    {
        throw std::invalid_argument("step must be positive");
    }
    if (cfg.steps == 0)
    {
        throw std::invalid_argument("steps must be at least 1");
    }
    if (cfg.burn_in >= cfg.steps)
    {
        throw std::invalid_argument("burn_in must be smaller than steps");
    }
    if (!cfg.init && !(cfg.init_box >= 0.0 && std::isfinite(cfg.init_box)))
    {
        throw std::invalid_argument("init_box must be non-negative");
    }
}

std::uint64_t sfs_gaussian_budget(SfsConfig const& cfg, std::size_t d)
{
    return static_cast<std::uint64_t>(cfg.K) * (cfg.m + 1) * d;
}

void sfs_step_noise(std::uint64_t seed, std::size_t k, std::span<double> eps, std::span<double> z)
{
    CounterStream stream(seed, StreamTag::sampler, static_cast<std::uint32_t>(k));
    stream.fill_gaussian(eps);
    stream.fill_gaussian(z);
}

RunResult run_sfs(Potential const& p, SfsConfig const& cfg)
{
    validate(cfg);
    std::size_t const d = p.dim();
    double const s = 1.0 / static_cast<double>(cfg.K);
    double const noise_scale = std::sqrt(cfg.sigma * s);

    DriftEstimator drift(p, cfg.sigma, cfg.form, cfg.m);
    Point y(d, 0.0), b(d), eps(d);
    std::vector<double> z(cfg.m * d);

    RunResult out;
    out.seed_used = cfg.seed;
    if (cfg.record_path)
    {
        out.path.reserve(cfg.K + 1);
        out.path.push_back(y);
    }
    for (std::size_t k = 0; k < cfg.K; ++k)
    {
        double const t = static_cast<double>(k) / static_cast<double>(cfg.K);
        sfs_step_noise(cfg.seed, k, eps, z);
        try
        {
            drift.estimate(y, t, z, b);
        }
        catch (std::domain_error const& e)
        {
            throw std::domain_error("iteration " + std::to_string(k) + ": " + e.what());
        }
        for (std::size_t i = 0; i < d; ++i)
        {
            y[i] += cfg.sigma * s * b[i] + noise_scale * eps[i];
        }
        if (!all_finite(y))
        {
            throw std::domain_error("non-finite iterate at iteration " + std::to_string(k + 1));
        }
        if (cfg.record_path)
        {
            out.path.push_back(y);
        }
    }
    out.final_point = y;
    out.final_value = p.value(y);
    out.best_point = y;
    out.best_value = out.final_value;
    out.gaussians_consumed = sfs_gaussian_budget(cfg, d);
    return out;
}

RunResult run_langevin(Potential const& p, LangevinConfig const& cfg)
{
    validate(cfg);
    std::size_t const d = p.dim();
    Point z(d), grad(d);
    if (cfg.init)
    {
        if (cfg.init->size() != d)
        {
            throw std::invalid_argument("init has the wrong dimension");
        }
        z = *cfg.init;
    }
    else
    {
        CounterStream init_stream(cfg.seed, StreamTag::initial_point);
        for (double& v : z)
        {
            v = cfg.init_box * (2.0 * init_stream.uniform() - 1.0);
        }
    }

    CounterStream noise(cfg.seed, StreamTag::sampler);
    double const noise_scale = cfg.zero_noise ? 0.0 : std::sqrt(2.0 * cfg.sigma * cfg.step);

    RunResult out;
    out.seed_used = cfg.seed;
    if (cfg.record_path)
    {
        out.path.reserve(cfg.steps + 1);
        out.path.push_back(z);
    }
    double value = p.value_and_gradient(z, grad);
    out.best_value = HUGE_VAL;
    auto track_best = [&](std::size_t k) {
        if (k >= cfg.burn_in && value < out.best_value)
        {
            out.best_value = value;
            out.best_point = z;
        }
    };
    track_best(0);
    for (std::size_t k = 0; k < cfg.steps; ++k)
    {
        for (std::size_t i = 0; i < d; ++i)
        {
            double const e = cfg.zero_noise ? 0.0 : noise.gaussian();
            z[i] += -cfg.step * grad[i] + noise_scale * e;
        }
        if (!all_finite(z))
        {
            throw std::domain_error("non-finite iterate at iteration " + std::to_string(k + 1));
        }
        value = p.value_and_gradient(z, grad);
        if (cfg.record_path)
        {
            out.path.push_back(z);
        }
        track_best(k + 1);
    }
    out.final_point = z;
    out.final_value = value;
    out.gaussians_consumed = cfg.zero_noise ? 0 : static_cast<std::uint64_t>(cfg.steps) * d;
    return out;
}

RunResult run_one(Potential const& p, SamplerConfig const& cfg)
{
    return std::visit(
        [&](auto const& c) -> RunResult {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, SfsConfig>)
            {
                return run_sfs(p, c);
            }
            else
            {
                return run_langevin(p, c);
            }
        },
        cfg);
}

std::vector<RunResult> run_batch(PotentialPtr const& p, SamplerConfig const& cfg, std::size_t n_runs,
                                 std::uint64_t master_seed, std::size_t workers)
{
    if (n_runs == 0)
    {
        throw std::invalid_argument("n_runs must be at least 1");
    }
    std::visit([](auto const& c) { validate(c); }, cfg);
    if (workers == 0)
    {
        workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    }
    workers = std::min(workers, n_runs);

    std::vector<RunResult> results(n_runs);
    std::vector<std::exception_ptr> errors(n_runs);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < n_runs; i = next++)
        {
            SamplerConfig local = cfg;
            std::uint64_t const seed = derive_run_seed(master_seed, i);
            std::visit([seed](auto& c) { c.seed = seed; }, local);
            try
            {
                results[i] = run_one(*p, local);
                results[i].run_index = i;
            }
            catch (...)
            {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers == 1)
    {
        work();
    }
    else
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w)
        {
            pool.emplace_back(work);
        }
    }
    for (std::size_t i = 0; i < n_runs; ++i)
    {
        if (errors[i])
        {
            try
            {
                std::rethrow_exception(errors[i]);
            }
            catch (std::exception const& e)
            {
                throw RunError(i, e.what());
            }
        }
    }
    return results;
}

}  // namespace sfs
