#include "nrmc/experiment.hpp"

#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

int main(int argc, char** argv) {
    CLI::App app{"Single-node-flip redistricting sampler with non-reversible flow variants"};

    std::string config_path;
    std::string method;
    std::string out_dir;
    double beta = -1.0;
    std::int64_t steps = -1;
    int chains = -1;
    std::int64_t seed = -1;
    bool resume = false;

    app.add_option("--config", config_path, "Experiment configuration (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    app.add_option("--method", method,
                   "Override sampler: snf, snf-tempered, com-flow, or d2d-flow");
    app.add_option("--beta", beta, "Override proposal temper in [0, 1]");
    app.add_option("--steps", steps, "Override step count");
    app.add_option("--chains", chains, "Override chain count");
    app.add_option("--seed", seed, "Override RNG seed");
    app.add_option("--out", out_dir, "Override output directory");
    app.add_flag("--resume", resume, "Continue from the checkpoint in the output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        nrmc::ExperimentConfig config = nrmc::ExperimentConfig::from_json_file(config_path);
        if (!method.empty()) config.method = nrmc::method_from_string(method);
        if (beta >= 0.0) config.beta = beta;
        if (steps >= 0) config.steps = steps;
        if (chains >= 0) config.chains = chains;
        if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);
        if (!out_dir.empty()) config.out_dir = out_dir;

        const nrmc::ExperimentResult result = nrmc::run_experiment(config, resume);

        std::int64_t accepted = 0, total = 0;
        for (const nrmc::ChainResult& c : result.chains) {
            accepted += c.accepted;
            total += c.steps;
        }
        std::printf("%d chain(s), %lld steps each, acceptance %.4f, %.1fs\n",
                    static_cast<int>(result.chains.size()),
                    static_cast<long long>(result.chains.empty() ? 0 : result.chains[0].steps),
                    total ? static_cast<double>(accepted) / static_cast<double>(total) : 0.0,
                    result.wall_seconds);
        if (!config.out_dir.empty())
            std::printf("results written to %s\n", config.out_dir.c_str());
        return 0;
    } catch (const nrmc::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "run failed: %s\n", e.what());
        return 3;
    }
}
