#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qsched/lp.hpp"

namespace qsched {

/// Parsed run configuration file (JSON). theta/eta/power/K are required;
/// the rest are optional defaults for the CLI commands.
struct RunConfig {
    SystemConfig system;
    std::optional<double> budget;
    std::vector<double> budgets;
    std::optional<std::int64_t> slots;
    std::optional<std::uint64_t> seed;
};

RunConfig load_config(const std::string& path);

/// Provenance header embedded in every output file.
struct RunManifest {
    std::string config_path;
    std::string command;
    std::string parameters;
    std::uint64_t seed = 0;
    std::string version;
    std::string timestamp; // "-" unless explicitly requested

    std::string to_comment(const std::string& prefix) const;
};

std::string tool_version();

/// Threshold-policy file (JSON with // manifest header).
void save_policy(const std::string& path, const ThresholdPolicy& tp, const SystemConfig& config,
                 const SolveResult& predicted, const RunManifest& manifest);
ThresholdPolicy load_policy(const std::string& path, const SystemConfig& config);

/// Sweep CSV: one row per budget with columns
/// budget,power_used,delay,K_1..K_W,frac_1..frac_W; infeasible budgets are
/// emitted as comment lines. Numbers carry 9 significant digits.
std::string sweep_to_csv(const std::vector<TradeoffPoint>& points, int num_channel_states,
                         const RunManifest& manifest);

/// gnuplot script plotting the delay column of a sweep CSV.
std::string gnuplot_script(const std::string& csv_path);

/// Fixed-width value formatting used for all CLI numeric output (9 significant digits).
std::string format_value(double v);

} // namespace qsched
