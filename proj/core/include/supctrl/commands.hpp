#pragma once

#include <exception>
#include <iosfwd>
#include <string>
#include <vector>

#include "supctrl/config.hpp"

namespace supctrl {

/// Process exit codes.
enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 1,
    kExitAssumption = 2,  // assumption violation or unsupported regime
    kExitNumeric = 3,     // numeric failure or a failed verification item
};

/// Maps a library exception to its exit code.
int exit_code_for(const std::exception& e);

/// Each command writes a `key = value` report (CSV for figure1) and returns
/// its exit code. Errors propagate as exceptions.
int cmd_solve(const ExperimentConfig& cfg, std::ostream& out);
int cmd_figure1(const ExperimentConfig& cfg, std::ostream& out);
int cmd_verify(const ExperimentConfig& cfg, bool skip_mc, std::ostream& out);
int cmd_simulate(const ExperimentConfig& cfg, std::ostream& out);

/// Grid of the figure: 399 uniform points on [figure_lo, figure_hi] plus y*.
std::vector<double> figure_grid(const ExperimentConfig& cfg, double y_star);

struct Figure1Row {
    double x, f_optimal, f_low, f_high;
};
/// Parses CSV written by cmd_figure1.
std::vector<Figure1Row> read_figure1_csv(std::istream& in);

/// Runs a command by name, copies its output to `out` and to the output
/// directory, and converts exceptions into an `error = ...` line on `err`
/// plus the matching exit code.
int run_command(const std::string& name, const ExperimentConfig& cfg, bool skip_mc, std::ostream& out,
                std::ostream& err);

}  // namespace supctrl
