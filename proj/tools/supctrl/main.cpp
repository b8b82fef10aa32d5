#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "supctrl/commands.hpp"
#include "supctrl/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Singular control of one-dimensional diffusions: thresholds, representing functions, checks"};
    app.require_subcommand(1, 1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    std::size_t paths = 0;
    bool skip_mc = false;
    double kappa_perturbation = 0.0;

    const char* names[][2] = {
        {"solve", "Solve for the optimal threshold and report values on a grid"},
        {"figure1", "Write the representing functions for y*, 0.75 y* and 1.25 y* as CSV"},
        {"verify", "Run the invariant suite and report pass/fail per item"},
        {"simulate", "Monte Carlo estimates next to their analytic values"},
    };
    for (const auto& n : names) {
        CLI::App* sub = app.add_subcommand(n[0], n[1]);
        sub->add_option("--config", config_path, "Experiment config file")->required();
        sub->add_option("--out", out_dir, "Output directory (overrides output.dir)");
        sub->add_option("--seed", seed, "RNG seed (overrides simulation.seed)");
        sub->add_option("--paths", paths, "Path count (overrides simulation.paths and verify_paths)");
        if (std::string(n[0]) == "verify") sub->add_flag("--skip-mc", skip_mc, "Analytic items only");
        sub->add_option("--debug-kappa-perturbation", kappa_perturbation)->group("");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? supctrl::kExitOk : supctrl::kExitConfig;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    supctrl::ExperimentConfig cfg;
    try {
        cfg = supctrl::load_config(config_path);
    } catch (const supctrl::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return supctrl::kExitConfig;
    }
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    const auto sub = app.get_subcommands().front();
    if (sub->count("--seed")) cfg.sim.seed = seed;
    if (sub->count("--paths")) {
        if (paths == 0 || (cfg.sim.antithetic && paths % 2)) {
            std::cerr << "error: --paths must be positive (and even with antithetic pairs)\n";
            return supctrl::kExitConfig;
        }
        cfg.sim.n_paths = paths;
        cfg.verify_paths = paths;
    }
    cfg.kappa_perturbation = kappa_perturbation;
    return supctrl::run_command(command, cfg, skip_mc, std::cout, std::cerr);
}
