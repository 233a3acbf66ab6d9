#ifndef GEOKRIG_COMMANDS_HPP
#define GEOKRIG_COMMANDS_HPP

#include <string>

#include "geokrig/run_config.hpp"

namespace geokrig::cli {

// Batch subcommands. Each validates the config, performs the work, writes its
// outputs plus an effective-config sidecar under cfg.out, and returns the
// process exit code (0 on full success).
int cmd_generate(const RunConfig& cfg);
int cmd_fit_predict(const RunConfig& cfg);
int cmd_evaluate(const RunConfig& cfg);
int cmd_compare(const RunConfig& cfg);

// Distinct exit code per error class.
int exit_code_for(const std::exception& e);
std::string exit_code_table();

}  // namespace geokrig::cli

#endif  // GEOKRIG_COMMANDS_HPP
