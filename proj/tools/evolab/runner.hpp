#pragma once

#include "config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace evolab::cli {

enum ExitCode : int {
    exit_pass = 0,
    exit_check_failed = 1,
    exit_config_error = 2,
    exit_numeric_error = 3,
};

/// Every check id with its anchor, one per line, in catalog order.
void list_checks(std::ostream& out);

/// Runs a parsed experiment and writes its files; returns an ExitCode.
int run_experiment(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);

/// Full command line, without the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace evolab::cli
