#pragma once

#include <string>
#include <vector>

#include "clustop/pipeline.hpp"

namespace clustop {

/// Entry point of the `clustop` executable. Returns the process exit code.
int cli_main(int argc, const char* const* argv);

/// Parses `run` options (flags and an optional --config file) into a config.
/// `args` excludes the program name and the subcommand.
PipelineConfig parse_run_args(const std::vector<std::string>& args);

}  // namespace clustop
