// Command-line front end:
//   rwre <kind> --config FILE [--seed N] [--workers K] [--out DIR]
//   rwre validate FILE
// Exit codes: 0 ok, 1 validation error, 2 runtime error.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rwre/cli/config.hpp"
#include "rwre/cli/run.hpp"

namespace
{

int report(const rwre::cli::ParseResult& r)
{
    for (const auto& e : r.errors)
        std::cerr << "error: " << rwre::cli::to_string(e) << "\n";
    return 1;
}

}  // namespace

int main(int argc, char** argv)
{
    using namespace rwre::cli;
    CLI::App app{"Random walk in random environment experiments"};
    app.set_version_flag("--version", std::string(version()));
    app.require_subcommand(1);

    auto* validate = app.add_subcommand("validate", "Check a config file without running it");
    std::string validate_path;
    validate->add_option("file", validate_path, "Config file")->required();

    struct Common
    {
        std::string config;
        std::optional<std::uint64_t> seed;
        std::optional<unsigned> workers;
        std::optional<std::string> out;
    };
    Common common;
    std::vector<CLI::App*> kinds;
    for (auto k : experiment_kinds())
    {
        auto* sub = app.add_subcommand(std::string(k), "Run a '" + std::string(k) + "' experiment");
        sub->add_option("--config", common.config, "Config file")->required();
        sub->add_option("--seed", common.seed, "Override master_seed");
        sub->add_option("--workers", common.workers, "Worker threads")->check(CLI::Range(1u, 1024u));
        sub->add_option("--out", common.out, "Output directory");
        kinds.push_back(sub);
    }

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (validate->parsed())
    {
        auto r = load_config(validate_path);
        if (!r.config)
            return report(r);
        std::cout << "ok: " << r.config->kind << "\n";
        return 0;
    }

    for (auto* sub : kinds)
    {
        if (!sub->parsed())
            continue;
        auto r = load_config(common.config, sub->get_name());
        if (!r.config)
            return report(r);
        auto cfg = std::move(*r.config);
        if (common.seed)
            cfg.master_seed = *common.seed;
        if (common.workers)
            cfg.workers = *common.workers;
        if (common.out)
            cfg.output_dir = *common.out;
        try
        {
            auto man = run(cfg);
            std::cout << "wrote " << man.digests.size() << " files to " << cfg.output_dir << " in "
                      << man.wall_seconds << " s\n";
            return 0;
        }
        catch (const std::exception& e)
        {
            std::cerr << "runtime error: " << e.what() << "\n";
            return 2;
        }
    }
    return 1;
}
