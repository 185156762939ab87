#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sfs/drift.hpp"
#include "sfs/potentials.hpp"

namespace sfs {

struct SfsConfig
{
    double sigma = 0.01;
    std::size_t K = 200;  //!< steps; s = 1/K, t_k = k/K
    std::size_t m = 1000;
    DriftForm form = DriftForm::gradient;
    std::uint64_t seed = 0;
    bool record_path = false;
};

struct LangevinConfig
{
    double sigma = 0.01;
    double step = 1e-3;
    std::size_t steps = 1000;
    std::size_t burn_in = 0;
    //! Start point; when absent, uniform in [-init_box, init_box]^d from StreamTag::initial_point.
    std::optional<Point> init;
    double init_box = 5.0;
    std::uint64_t seed = 0;
    bool record_path = false;
    //! Test hook: drop the noise term entirely.
    bool zero_noise = false;
};

using SamplerConfig = std::variant<SfsConfig, LangevinConfig>;

struct RunResult
{
    std::size_t run_index = 0;
    Point final_point;
    double final_value = 0.0;
    //! Langevin: lowest-V iterate after burn-in. SFS: same as the final point.
    Point best_point;
    double best_value = 0.0;
    std::vector<Point> path;
    std::uint64_t gaussians_consumed = 0;
    std::uint64_t seed_used = 0;
};

//! A sampler error tagged with the run it came from.
class RunError : public std::runtime_error
{
  public:
    RunError(std::size_t run_index, std::string const& what);
    std::size_t run_index() const { return run_index_; }

  private:
    std::size_t run_index_;
};

void validate(SfsConfig const& cfg);
void validate(LangevinConfig const& cfg);

/*!
 * Noise of SFS step k: eps (d normals) then Z_1..Z_m (m x d, row-major).
 *
 * All of it is read in that order from CounterStream(seed, sampler, k), so a
 * step can be replayed without running the steps before it.
 */
void sfs_step_noise(std::uint64_t seed, std::size_t k, std::span<double> eps, std::span<double> z);

/*!
 * Euler-Maruyama run of the Schrodinger-Follmer diffusion from Y_0 = 0:
 *
 *   Y_{k+1} = Y_k + sigma s b(Y_k, t_k) + sqrt(sigma s) eps_{k+1}
 *
 * with b the Monte Carlo drift on the m normals of step k.
 * Throws RunError on a non-finite iterate, naming the iteration.
 */
RunResult run_sfs(Potential const& p, SfsConfig const& cfg);

//! Z_{k+1} = Z_k - step grad V(Z_k) + sqrt(2 sigma step) eps_{k+1}.
RunResult run_langevin(Potential const& p, LangevinConfig const& cfg);

RunResult run_one(Potential const& p, SamplerConfig const& cfg);

/*!
 * n_runs independent runs. Run i uses seed derive_run_seed(master_seed, i)
 * regardless of the seed in `cfg`, so results do not depend on `workers`
 * (0 means hardware concurrency). The first failing run (by index) is
 * rethrown as RunError.
 */
std::vector<RunResult> run_batch(PotentialPtr const& p, SamplerConfig const& cfg, std::size_t n_runs,
                                 std::uint64_t master_seed, std::size_t workers = 0);

//! Gaussian budget of one SFS run: K (m + 1) d.
std::uint64_t sfs_gaussian_budget(SfsConfig const& cfg, std::size_t d);

}  // namespace sfs
