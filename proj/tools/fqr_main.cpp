#include <CLI11.hpp>

#include "cli_commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Functional linear quantile regression toolkit"};
    app.require_subcommand(1);

    fqr::cli::GlobalOptions options;
    std::uint64_t seed = 0;
    bool seed_set = false;

    const char* names[] = {"fit", "predict", "select", "simulate"};
    const char* help[] = {
        "Fit a model from curve and response CSVs",
        "Predict conditional quantiles for new curves from a saved model",
        "Score cut-off candidates with AIC/BIC/GACV",
        "Run a Monte Carlo study from a config file",
    };
    for (int i = 0; i < 4; ++i) {
        CLI::App* sub = app.add_subcommand(names[i], help[i]);
        sub->add_option("--config", options.config_path, "Path to the command config (JSON)")
            ->required();
        sub->add_option("--out", options.out_dir, "Output directory")->required();
        sub->add_option("--threads", options.threads, "Cap the OpenMP worker count");
        sub->add_option("--seed", seed, "Override the config seed")->each([&](const std::string&) {
            seed_set = true;
        });
    }

    CLI11_PARSE(app, argc, argv);
    if (seed_set) options.seed_override = seed;
    return fqr::cli::run_command(app.get_subcommands().front()->get_name(), options);
}
