// Command-line front end for the experiment pipeline.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include <diffopt/diffopt.hpp>

namespace {

enum Exit { kOk = 0, kRuntime = 1, kConfig = 2 };

struct Args {
    std::vector<std::string> configs;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    bool dump_matrices = false;
};

diffopt::ExperimentConfig load(const std::string& path, const Args& args) {
    diffopt::ExperimentConfig cfg = diffopt::load_config(path);
    if (args.seed) cfg.seed = *args.seed;
    return cfg;
}

int dispatch(const std::string& command, const Args& args) {
    using namespace diffopt;
    const RunOptions ro{args.jobs, args.dump_matrices};

    if (command == "compare") {
        std::vector<ExperimentConfig> cfgs;
        for (const auto& path : args.configs) cfgs.push_back(load(path, args));
        compare(cfgs, ro);
        std::cout << "compare: wrote compare_learning.csv and compare_pairsteps.csv to "
                  << cfgs.front().output_dir.string() << '\n';
        return kOk;
    }
    if (args.configs.size() != 1) throw ConfigError(command + " takes exactly one --config");

    const Experiment ex(load(args.configs.front(), args));
    if (command == "run") {
        run_experiment(ex.cfg, ro);
        std::cout << "run: wrote all artifacts to " << ex.cfg.output_dir.string() << '\n';
        return kOk;
    }

    std::vector<std::string> written;
    if (command == "difficulty") {
        written = run_difficulty(ex);
    } else {
        const OptionSet set = ex.options();
        std::cout << fmt::format("{}: {} options ({})\n", command, set.size(), to_string(set.method));
        if (command == "discover") {
            written = run_discover(ex, set, ro);
        } else if (command == "learn") {
            written = run_learn(ex, set, ro);
        } else {
            written = run_pairsteps(ex, set, ro);
        }
    }
    write_manifest(ex, command, written);
    for (const auto& f : written) std::cout << "  " << (ex.cfg.output_dir / f).string() << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Diffusion options toolkit"};
    app.require_subcommand(1);
    Args args;

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"discover", "Discover options and write options.csv"},
        {"learn", "Run Q-learning trials and write learning curves and visitation counts"},
        {"pairsteps", "Estimate steps between every pair of states"},
        {"difficulty", "Compute the domain difficulty index"},
        {"compare", "Compare several configs on one domain"},
        {"run", "Produce every artifact for one config"}};
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", args.configs, "Experiment config file")->required();
        sub->add_option("--seed", args.seed, "Override the config seed");
        sub->add_option("--jobs", args.jobs, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_flag("--dump-matrices", args.dump_matrices,
                      "Also write M, W, N and the spectrum as CSV");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return dispatch(command, args);
    } catch (const diffopt::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const diffopt::DomainMismatch& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
}
