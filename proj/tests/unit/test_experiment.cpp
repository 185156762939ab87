#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sfs/experiment.hpp"
#include "sfs/rng.hpp"

using namespace sfs;
namespace fs = std::filesystem;

namespace {

std::string slurp(fs::path const& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(std::string const& name)
{
    auto const dir = fs::temp_directory_path() / ("sfs_unit_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string config_error(std::string const& text)
{
    try
    {
        parse_config(text, "cfg.json");
    }
    catch (ConfigError const& e)
    {
        return e.what();
    }
    return "";
}

constexpr char kRunConfig[] = R"({
  "master_seed": 17,
  "n_runs": 24,
  "potential": {"name": "rastrigin", "dim": 2, "radius": 5.0, "delta": 1.0},
  "sampler": {"type": "sfs", "sigma": 0.05, "K": 20, "m": 30},
  "diagnostics": {"success_tau": [0.5, 2.0]}
})";

constexpr char kCompareConfig[] = R"({
  "master_seed": 3,
  "n_runs": 8,
  "potential": {"name": "rastrigin", "dim": 1, "radius": 5.0, "delta": 1.0},
  "sampler": {"type": "sfs", "sigma": 0.05, "K": 10, "m": 9},
  "baseline": {"type": "langevin", "sigma": 0.05, "step": 0.001, "steps": 100}
})";

}  // namespace

TEST_SUITE("experiment")
{
    TEST_CASE("source map records the line of every key")
    {
        std::string const text = "{\n  \"a\": 1,\n  \"b\": {\n    \"c\": [1,\n      2]\n  }\n}\n";
        SourceMap const map(text);
        CHECK(map.line_of("") == 1);
        CHECK(map.line_of("/a") == 2);
        CHECK(map.line_of("/b") == 3);
        CHECK(map.line_of("/b/c") == 4);
        CHECK(map.line_of("/b/c/1") == 5);
        CHECK(map.line_of("/b/missing") == 3);
    }

    TEST_CASE("config errors name the key, the line and the rule")
    {
        std::string const sigma = "{\n  \"potential\": {\"name\": \"quadratic\", \"dim\": 1},\n"
                                  "  \"sampler\": {\n    \"type\": \"sfs\",\n    \"sigma\": 1.5,\n"
                                  "    \"K\": 10, \"m\": 10\n  }\n}\n";
        auto const e = config_error(sigma);
        CHECK(e.find("cfg.json:5:") == 0);
        CHECK(e.find("sampler.sigma") != std::string::npos);
        CHECK(e.find("(0, 1]") != std::string::npos);

        auto const unknown = config_error("{\n  \"n_runs\": 2,\n  \"smaple\": 1\n}\n");
        CHECK(unknown.find("cfg.json:3:") == 0);
        CHECK(unknown.find("unknown key \"smaple\"") != std::string::npos);

        auto const broken = config_error("{\n  \"n_runs\": 2,\n  \"x\": \n}\n");
        CHECK(broken.find("invalid JSON") != std::string::npos);

        auto const type = config_error("{\"n_runs\": \"ten\"}");
        CHECK(type.find("n_runs: expected a non-negative integer") != std::string::npos);

        auto const form = config_error(
            R"({"sampler": {"type": "sfs", "sigma": 0.1, "K": 5, "m": 5, "form": "score"}})");
        CHECK(form.find("sampler.form") != std::string::npos);

        auto const init = config_error(R"({"potential": {"name": "quadratic", "dim": 2},
            "sampler": {"type": "langevin", "sigma": 0.1, "step": 0.01, "steps": 10, "init": [0.0]}})");
        CHECK(init.find("sampler.init") != std::string::npos);

        CHECK(config_error(kRunConfig).empty());
        CHECK(parse_config(kRunConfig).config_hash == fnv1a64(kRunConfig));
        CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    }

    TEST_CASE("run writes its files and is byte-reproducible")
    {
        auto const cfg = parse_config(kRunConfig, "run.json");
        auto const a = scratch("run_a"), b = scratch("run_b");
        cmd_run(cfg, {a, 1, std::nullopt});
        cmd_run(cfg, {b, 8, std::nullopt});
        for (auto const* f : {"runs.csv", "summary.json", "manifest.json"})
        {
            CHECK(fs::exists(a / f));
        }
        CHECK(slurp(a / "runs.csv") == slurp(b / "runs.csv"));
        CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));

        auto const csv = slurp(a / "runs.csv");
        CHECK(csv.rfind("run_index,x_0,x_1,final_value,best_value,gaussians_consumed,seed\n", 0) == 0);
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 25);

        auto const summary = nlohmann::json::parse(slurp(a / "summary.json"));
        CHECK(summary.at("n_runs") == 24);
        CHECK(summary.at("success").size() == 2);
        auto const manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
        CHECK(manifest.at("tool") == "sfs_cli");
        CHECK(manifest.at("master_seed") == 17);
        CHECK(manifest.at("seed_override") == false);
        CHECK(manifest.at("config") == "run.json");
        CHECK(manifest.at("run_seeds").size() == 24);
        CHECK(manifest.at("run_seeds")[3] == derive_run_seed(17, 3));

        auto const c = scratch("run_c");
        cmd_run(cfg, {c, 1, 18});
        CHECK(slurp(c / "runs.csv") != csv);
        CHECK(nlohmann::json::parse(slurp(c / "manifest.json")).at("seed_override") == true);
    }

    TEST_CASE("gaussian target summary passes its moment check")
    {
        auto const cfg = parse_config(R"({
          "master_seed": 1, "n_runs": 400,
          "potential": {"name": "quadratic", "dim": 2, "shift": [1.0, -1.0]},
          "sampler": {"type": "sfs", "sigma": 0.1, "K": 10, "m": 5}
        })");
        auto const dir = scratch("gauss");
        cmd_run(cfg, {dir, 1, std::nullopt});
        auto const summary = nlohmann::json::parse(slurp(dir / "summary.json"));
        CHECK(summary.at("gaussian_check").at("pass") == true);
    }

    TEST_CASE("compare runs both sides under matched budgets")
    {
        auto const cfg = parse_config(kCompareConfig);
        auto const dir = scratch("compare");
        cmd_compare(cfg, {dir, 2, std::nullopt});
        for (auto const* f : {"runs_sampler.csv", "runs_baseline.csv", "scatter.csv", "comparison.json"})
        {
            CHECK(fs::exists(dir / f));
        }
        auto const j = nlohmann::json::parse(slurp(dir / "comparison.json"));
        CHECK(j.at("sampler").at("gaussian_budget_per_run") == 100);
        CHECK(j.at("baseline").at("gaussian_budget_per_run") == 100);
        auto const& diff = j.at("difference");
        CHECK(diff.at("ci95")[0].get<double>() <= diff.at("value").get<double>());
        CHECK(diff.at("sampler_lower") == (diff.at("value").get<double>() < 0.0));

        std::string unmatched = kCompareConfig;
        unmatched.replace(unmatched.find("\"steps\": 100"), 12, "\"steps\": 150");
        CHECK_THROWS_AS(cmd_compare(parse_config(unmatched), {dir, 1, std::nullopt}), ConfigError);
    }

    TEST_CASE("compare against itself gives a zero difference")
    {
        std::string self = kCompareConfig;
        self.replace(self.find("\"baseline\""), std::string::npos,
                     "\"baseline\": {\"type\": \"sfs\", \"sigma\": 0.05, \"K\": 10, \"m\": 9}\n}");
        auto const dir = scratch("self");
        cmd_compare(parse_config(self), {dir, 1, std::nullopt});
        auto const j = nlohmann::json::parse(slurp(dir / "comparison.json"));
        // Different seeds on each side, so only the interval has to cover zero.
        auto const ci = j.at("difference").at("ci95");
        CHECK(ci[0].get<double>() <= 0.0);
        CHECK(ci[1].get<double>() >= 0.0);
    }

    TEST_CASE("verify and constants commands")
    {
        auto const cfg = parse_config(R"({
          "master_seed": 5,
          "checks": [
            {"type": "large_deviation",
             "potential": {"name": "double_well", "c1": 1.0, "c2": 4.0},
             "tau": 0.5, "sigmas": [0.2, 0.1, 0.05, 0.02], "grid_points": 20001},
            {"type": "constants", "potential": {"name": "rastrigin", "dim": 1, "radius": 5.0, "delta": 1.0},
             "sigma": 0.5, "grid_points_per_dim": 101}
          ]
        })");
        auto const dir = scratch("verify");
        CHECK(cmd_verify(cfg, {dir, 1, std::nullopt}));
        auto const j = nlohmann::json::parse(slurp(dir / "verification.json"));
        CHECK(j.at("all_pass") == true);
        CHECK(j.at("checks").size() == 2);
        CHECK(j.at("checks")[0].at("type") == "large_deviation");
        CHECK(fs::exists(dir / "slopes_0.csv"));

        auto const cc = parse_config(R"({
          "potential": {"name": "rastrigin", "dim": 1, "radius": 5.0, "delta": 1.0},
          "diagnostics": {"constants": {"sigma": 0.5, "grid_points_per_dim": 101}}
        })");
        auto const cdir = scratch("constants");
        cmd_constants(cc, {cdir, 1, std::nullopt});
        auto const k = nlohmann::json::parse(slurp(cdir / "constants.json"));
        CHECK(k.at("constants").contains("failure_bound_log"));

        CHECK_THROWS_AS(cmd_constants(parse_config(R"({"potential": {"name": "quadratic", "dim": 1}})"),
                                      {cdir, 1, std::nullopt}),
                        ConfigError);
        CHECK_THROWS_AS(cmd_run(parse_config("{}"), {cdir, 1, std::nullopt}), ConfigError);
    }

    TEST_CASE("gibbs reference samples")
    {
        PotentialSpec q;
        q.name = "quadratic";
        q.dim = 1;
        q.shift = {2.0};
        auto const s = gibbs_reference_samples(q, 0.04, 20000, 3, 20001);
        double mean = 0.0;
        for (double v : s)
        {
            mean += v;
        }
        mean /= static_cast<double>(s.size());
        CHECK(std::abs(mean - 2.0) <= 5.0 * 0.2 / std::sqrt(20000.0));
    }
}
