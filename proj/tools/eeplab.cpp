// Command-line front end: eeplab <command> --config run.json [--out dir] [--seed n] [--threads k]

#include "eeplab/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

int main(int argc, char** argv) {
    CLI::App app{"American option pricing and early-exercise premium checks"};
    app.require_subcommand(1);

    std::optional<std::filesystem::path> config;
    eeplab::cli::Overrides overrides;
    const std::map<std::string, std::string> help = {
        {"price", "American value and delta from the grid (regression for n > 2), European value by Monte Carlo"},
        {"decompose", "check V = V_E + premium with the exercise region from the grid or the regression rule"},
        {"region", "dump the exercise region on the grid to region.csv"},
        {"convergence", "repeat decompose over a ladder of grid sizes and path counts"},
        {"selftest", "run the acceptance criteria"},
    };
    for (const auto& name : eeplab::cli::commands()) {
        auto* sub = app.add_subcommand(name, help.at(name));
        if (name != "selftest") sub->add_option("--config", config, "run configuration (JSON)")->required();
        sub->add_option("--out", overrides.out, "output directory (overrides output.dir)");
        sub->add_option("--seed", overrides.seed, "Monte Carlo seed (overrides mc.seed)");
        sub->add_option("--threads", overrides.threads, "worker threads, 0 = all cores");
    }
    CLI11_PARSE(app, argc, argv);

    const std::string command = app.get_subcommands().front()->get_name();
    return eeplab::cli::run(command, config, overrides, std::cout, std::cerr);
}
