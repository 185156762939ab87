#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sfs/constants.hpp"
#include "sfs/diagnostics.hpp"
#include "sfs/samplers.hpp"

namespace sfs {

inline constexpr char kToolVersion[] = "0.1.0";

//! Invalid configuration; the message already carries "file:line: ".
class ConfigError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

//! Line of every value in a JSON text, keyed by JSON pointer ("" is the root).
class SourceMap
{
  public:
    SourceMap() = default;
    explicit SourceMap(std::string_view text);
    //! Line of `pointer`, or of its closest recorded ancestor.
    int line_of(std::string pointer) const;

  private:
    std::map<std::string, int> lines_;
};

struct PotentialSpec
{
    std::string name;  //!< "quadratic", "rastrigin" or "double_well"
    std::size_t dim = 1;
    Point shift;            //!< quadratic
    double B = 0.0;         //!< rastrigin
    double C = 0.0;         //!< rastrigin
    double c1 = 1.0;        //!< double_well
    double c2 = 1.0;        //!< double_well
    bool smooth = true;     //!< rastrigin and double_well
    std::optional<double> radius;
    std::optional<double> delta;
};

PotentialPtr build_potential(PotentialSpec const& spec);

struct ConstantsSpec
{
    double sigma = 0.5;
    ConstantsOptions options;
};

struct W2OracleSpec
{
    std::size_t grid_points = 20001;
    std::size_t n_projections = 64;
};

struct DiagnosticsSpec
{
    std::vector<double> success_tau{0.5};
    std::optional<double> cluster_delta_prime;
    std::optional<W2OracleSpec> w2_oracle;
    std::optional<ConstantsSpec> constants;
};

struct SfsCheckSpec
{
    std::size_t K = 100;
    std::size_t m = 200;
    DriftForm form = DriftForm::gradient;
    std::size_t n_runs = 2000;
    double tolerance = 0.15;
};

//! Oracle (and optionally SFS) cluster masses against the Laplace weights.
struct LaplaceCheck
{
    PotentialSpec potential;
    double sigma = 0.02;
    std::size_t n_samples = 100000;
    double delta_prime = 0.4;
    double tolerance = 0.05;
    std::size_t grid_points = 200001;
    std::optional<SfsCheckSpec> sfs;
};

//! sigma log mu_sigma(V >= tau) along a decreasing sigma grid.
struct SlopeCheck
{
    PotentialSpec potential;
    double tau = 0.5;
    std::vector<double> sigmas{0.2, 0.1, 0.05, 0.02};
    double tolerance = 0.15;
    std::size_t grid_points = 200001;
};

//! W2 between SFS output and the Gibbs measure across step counts.
struct W2TrendCheck
{
    PotentialSpec potential;
    double sigma = 0.1;
    std::size_t m = 100;
    DriftForm form = DriftForm::stein;
    std::vector<std::size_t> Ks{25, 50, 100, 200, 400};
    std::size_t n_runs = 2000;
    std::size_t min_non_increasing = 3;
    std::size_t grid_points = 20001;
    std::size_t n_projections = 64;
};

struct ConstantsCheck
{
    PotentialSpec potential;
    ConstantsSpec constants;
};

using CheckSpec = std::variant<LaplaceCheck, SlopeCheck, W2TrendCheck, ConstantsCheck>;

struct ExperimentConfig
{
    std::string source_name;
    std::uint64_t config_hash = 0;  //!< FNV-1a 64 of the file bytes
    std::uint64_t master_seed = 0;
    std::size_t n_runs = 1;
    std::optional<PotentialSpec> potential;
    std::optional<SamplerConfig> sampler;
    std::optional<SamplerConfig> baseline;
    DiagnosticsSpec diagnostics;
    std::vector<CheckSpec> checks;
    std::optional<std::string> output_dir;
    SourceMap source_map;
};

std::uint64_t fnv1a64(std::string_view bytes);

//! Throws ConfigError with a "source:line: " prefix on any schema violation.
ExperimentConfig parse_config(std::string_view text, std::string const& source_name = "config");
ExperimentConfig load_config(std::filesystem::path const& path);

struct CommandOptions
{
    std::optional<std::filesystem::path> out;
    std::size_t workers = 0;
    std::optional<std::uint64_t> seed;
};

// Each command writes its files into the output directory and throws on
// failure (ConfigError for missing sections, anything else for runtime errors).
void cmd_run(ExperimentConfig const& cfg, CommandOptions const& opts);
void cmd_compare(ExperimentConfig const& cfg, CommandOptions const& opts);
//! Returns true when every check passed.
bool cmd_verify(ExperimentConfig const& cfg, CommandOptions const& opts);
void cmd_constants(ExperimentConfig const& cfg, CommandOptions const& opts);

//! Header run_index,x_0..x_{d-1},final_value,best_value,gaussians_consumed,seed.
std::string runs_csv(std::vector<RunResult> const& runs, std::size_t d);

struct LaplaceCheckResult
{
    std::vector<double> weights;
    ClusterMasses oracle;
    double oracle_max_rel_error = 0.0;
    bool oracle_pass = false;
    std::optional<ClusterMasses> sfs;
    double sfs_max_rel_error = 0.0;
    bool sfs_pass = false;
    bool pass = false;
};
LaplaceCheckResult run_laplace_check(LaplaceCheck const& check, std::uint64_t seed, std::size_t workers = 0);

struct SlopeCheckResult
{
    std::vector<SlopePoint> slopes;
    bool monotone = false;
    double final_rel_error = 0.0;
    bool pass = false;
};
SlopeCheckResult run_slope_check(SlopeCheck const& check);

struct W2TrendResult
{
    std::vector<std::size_t> Ks;
    std::vector<double> distances;
    std::size_t non_increasing = 0;
    bool pass = false;
};
W2TrendResult run_w2_trend(W2TrendCheck const& check, std::uint64_t seed, std::size_t workers = 0);

struct ConstantsCheckResult
{
    ConstantsReport report;
    bool pass = false;
};
ConstantsCheckResult run_constants_check(ConstantsCheck const& check);

nlohmann::ordered_json to_json(LaplaceCheckResult const& r);
nlohmann::ordered_json to_json(SlopeCheckResult const& r);
nlohmann::ordered_json to_json(W2TrendResult const& r);

//! Samples of the Gibbs measure: quadrature oracle for d = 1, exact Gaussian for quadratics.
std::vector<double> gibbs_reference_samples(PotentialSpec const& spec, double sigma, std::size_t n,
                                            std::uint64_t seed, std::size_t grid_points);

}  // namespace sfs
