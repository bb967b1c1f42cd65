#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "crossfit/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"crossfit - estimator-agnostic cross-fitting engine"};
    app.require_subcommand(1);

    std::string config_path;
    std::string method_name;
    std::string format = "text";
    std::string output;
    int rep = 0;

    auto* validate = app.add_subcommand("validate", "Validate every method in a config");
    validate->add_option("config", config_path, "Experiment config (JSON)")->required();

    auto* schedule = app.add_subcommand("schedule", "Print the fold schedule audit table");
    schedule->add_option("config", config_path, "Experiment config (JSON)")->required();
    schedule->add_option("--method", method_name, "Method name")->required();
    schedule->add_option("--rep", rep, "Repetition index (default 0)");
    schedule->add_option("--format", format, "text|csv (default text)");

    auto* run = app.add_subcommand("run", "Run all methods and write a JSON result file");
    run->add_option("config", config_path, "Experiment config (JSON)")->required();
    run->add_option("-o,--output", output, "Output path override");

    auto* simulate = app.add_subcommand("simulate", "Monte-Carlo study over fresh DGP draws");
    simulate->add_option("config", config_path, "Experiment config (JSON)")->required();
    simulate->add_option("-o,--output", output, "Output path override");

    CLI11_PARSE(app, argc, argv);

    if (validate->parsed()) return crossfit::cli::cmd_validate(config_path, std::cout);
    if (schedule->parsed()) {
        return crossfit::cli::cmd_schedule(config_path, method_name, rep, format, std::cout);
    }
    if (run->parsed()) return crossfit::cli::cmd_run(config_path, output, std::cout);
    if (simulate->parsed()) return crossfit::cli::cmd_simulate(config_path, output, std::cout);
    return 1;
}
