#pragma once

#include <string>
#include <vector>

#include "breakaway/config.hpp"
#include "breakaway/result_table.hpp"

namespace breakaway {

inline constexpr const char* kToolVersion = "1.0.0";

enum ExitCode : int {
    exit_ok = 0,
    exit_config = 1,
    exit_numerical = 2,
    exit_statistical = 3,
};

struct CommandResult {
    ResultTable table;
    int exit_code = exit_ok;
    std::vector<std::string> messages;  // diagnostics for stderr
};

/// Names accepted by run_command.
const std::vector<std::string>& command_names();

CommandResult cmd_flat(const Config& config);
CommandResult cmd_fatigue(const Config& config);
CommandResult cmd_terrain(const Config& config);
CommandResult cmd_crash_mc(const Config& config);
CommandResult cmd_microstructure(const Config& config);

/// Dispatches by name; throws ConfigError for an unknown command.
CommandResult run_command(const std::string& name, const Config& config);

}  // namespace breakaway
