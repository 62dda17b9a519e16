#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "ambicon/harness.hpp"
#include "ambicon/model.hpp"

namespace ambicon {

/// Parsed run configuration (JSON file; see README for the schema).
struct RunConfig {
    RiskProfile profile;
    std::optional<AmbiguityBand> band_agent;
    std::optional<AmbiguityBand> band_principal;
    std::optional<std::string> field_csv;
    McSpec mc;
    PdeGrid pde;
    std::optional<LinearQuadraticContract> contract;
    double effort = 0.0;
    double alpha = 1.0;
    std::string sweep_axis;
    std::vector<double> sweep_values;
    std::string output_dir = ".";
};

RunConfig parse_config(const std::string& path);

/// Reads a grid-sampled band field from CSV (t,x,a_lo,a_hi,p_lo,p_hi rows).
MarkovAmbiguityField parse_field_csv(const std::string& path);

/// Dispatches one CLI command.  Returns the process exit code:
/// 0 success, 2 config error, 3 solver error, 4 failed crosscheck.
int run_command(const std::string& command, const RunConfig& config,
                bool quiet);

/// Full argv entry point (argument parsing + run_command).
int run_cli(int argc, char** argv);

}  // namespace ambicon
