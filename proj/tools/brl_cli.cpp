#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "brl/config.hpp"
#include "brl/experiment.hpp"

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    std::optional<std::string> out;
};

void add_common(CLI::App* cmd, Options& opts) {
    cmd->add_option("--config", opts.config, "experiment configuration file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", opts.seed, "base seed (overrides the config)");
    cmd->add_option("--threads", opts.threads, "worker threads (overrides BRL_THREADS and the config)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", opts.out, "output directory (overrides the config)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian risk-averse bandit and MDP experiments"};
    app.set_version_flag("--version", brl::kVersion);
    app.require_subcommand(1);

    Options opts;
    const std::pair<const char*, const char*> commands[] = {
        {"bandit-regret", "BRPS-CMAB and Thompson sampling regret curves"},
        {"mdp-regret", "BRPS-RL regret curves"},
        {"online-brvi", "online BRVI regret curves"},
        {"normality", "sqrt(N)(V_N - V^pi) deviations against their limit law"},
        {"solve", "value iteration, stationary distribution and limit parameters"},
    };
    for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), opts);

    CLI11_PARSE(app, argc, argv);

    try {
        const auto* cmd = app.get_subcommands().front();
        brl::ExperimentConfig config = brl::parse_config(opts.config);
        config.kind = brl::parse_experiment_kind(cmd->get_name());
        if (opts.seed) config.seed = *opts.seed;
        if (opts.out) config.output = *opts.out;
        config.threads = brl::resolve_threads(config.threads, opts.threads);
        config.validate();
        const auto result = brl::run_experiment(config);
        std::cout << "wrote " << result.curves.size() << " curve(s)";
        if (!result.normality.empty()) std::cout << " and " << result.normality.size() << " normality run(s)";
        std::cout << " to " << config.output << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
