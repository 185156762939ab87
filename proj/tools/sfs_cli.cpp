// sfs_cli: batch runner for the Schrodinger-Follmer sampler experiments.
//
//   sfs_cli run       --config cfg.json [--out DIR] [--workers N] [--seed U64]
//   sfs_cli compare   ...
//   sfs_cli verify    ...
//   sfs_cli constants ...
//
// Exit status: 0 ok, 1 runtime failure (or a failed verify check), 2 bad config.

#include <cstdio>
#include <exception>
#include <thread>

#include <CLI11.hpp>

#include "sfs/experiment.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Schrodinger-Follmer sampler experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out;
    std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    std::uint64_t seed = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config (JSON)")->required();
        sub->add_option("--out", out, "output directory (overrides output_dir)");
        sub->add_option("--workers", workers, "parallel runs")->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "master seed (overrides master_seed)");
    };
    auto* run = app.add_subcommand("run", "run a sampler batch");
    auto* compare = app.add_subcommand("compare", "run sampler and baseline batches side by side");
    auto* verify = app.add_subcommand("verify", "run the configured checks");
    auto* constants = app.add_subcommand("constants", "compute the regularity constants and bounds");
    for (auto* sub : {run, compare, verify, constants})
    {
        add_common(sub);
    }

    try
    {
        app.parse(argc, argv);
    }
    catch (CLI::ParseError const& e)
    {
        int const code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    sfs::CommandOptions opts;
    if (!out.empty())
    {
        opts.out = out;
    }
    opts.workers = workers;
    for (auto* sub : {run, compare, verify, constants})
    {
        if (sub->parsed() && sub->count("--seed") > 0)
        {
            opts.seed = seed;
        }
    }

    try
    {
        auto const cfg = sfs::load_config(config_path);
        if (run->parsed())
        {
            sfs::cmd_run(cfg, opts);
        }
        else if (compare->parsed())
        {
            sfs::cmd_compare(cfg, opts);
        }
        else if (verify->parsed())
        {
            if (!sfs::cmd_verify(cfg, opts))
            {
                std::fprintf(stderr, "verify: at least one check failed (see verification.json)\n");
                return 1;
            }
        }
        else
        {
            sfs::cmd_constants(cfg, opts);
        }
    }
    catch (sfs::ConfigError const& e)
    {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }
    catch (std::exception const& e)
    {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
