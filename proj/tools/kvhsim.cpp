// kvhsim: run, check, reduce and convergence commands over a key = value config file.
// KVH_NUM_THREADS sets the OpenMP thread count.

#include "kvh/commands.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
    if (const char* n = std::getenv("KVH_NUM_THREADS")) {
        const int threads = std::atoi(n);
        if (threads < 1) {
            std::cerr << "KVH_NUM_THREADS must be a positive integer\n";
            return 2;
        }
        omp_set_num_threads(threads);
    }

    CLI::App app{"Hybrid classical-quantum phase-space simulator"};
    app.require_subcommand(1);
    std::string output_dir = ".";
    app.add_option("--output-dir", output_dir, "Base directory for every output path")->capture_default_str();

    std::string config;
    auto* run = app.add_subcommand("run", "Integrate the configured model, write diagnostics.csv and snapshots");
    run->add_option("config", config, "Config file")->required()->check(CLI::ExistingFile);

    auto* check = app.add_subcommand("check", "Run the invariant suite on random states; nonzero exit on failure");
    check->add_option("config", config, "Config file")->required()->check(CLI::ExistingFile);

    std::string against;
    auto* reduce = app.add_subcommand("reduce", "Compare the closure model with a reduced model");
    reduce->add_option("config", config, "Config file")->required()->check(CLI::ExistingFile);
    reduce->add_option("--against", against, "Reference model")
        ->required()
        ->check(CLI::IsMember({"classical", "quantum", "meanfield", "ehrenfest"}));

    std::vector<double> dts;
    auto* conv = app.add_subcommand("convergence", "Richardson convergence study over a dt ladder");
    conv->add_option("config", config, "Config file")->required()->check(CLI::ExistingFile);
    conv->add_option("--dts", dts, "Time steps, at least three with ratio 2")->required()->expected(3, -1);

    CLI11_PARSE(app, argc, argv);

    try {
        const kvh::RunConfig c = kvh::load_config(config);
        if (*run) return kvh::run_command(c, output_dir, std::cout);
        if (*check) return kvh::check_command(c, std::cout);
        if (*reduce) return kvh::reduce_command(c, kvh::parse_reference(against), output_dir, std::cout);
        return kvh::convergence_command(c, dts, output_dir, std::cout);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
}
