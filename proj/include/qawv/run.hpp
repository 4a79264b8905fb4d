#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qawv::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitNumerical = 3,
    kExitTolerance = 4,
};

struct RunConfig {
    std::string command;
    // Positional scenario name (spin-figure <preset>).
    std::optional<std::string> positional;
    std::optional<std::string> preset;
    std::optional<std::string> config_path;
    std::string out_dir = ".";
    std::optional<std::size_t> grid_n;
    std::optional<double> grid_span;
    std::uint64_t seed = 1;
    double tol_scale = 1.0;
};

std::vector<std::string> commands();

// Runs one subcommand, writing CSV/JSON artifacts under out_dir and a short
// progress log to `log`. Never throws; failures map onto the exit codes.
int run(const RunConfig& config, std::ostream& log);

}  // namespace qawv::cli
