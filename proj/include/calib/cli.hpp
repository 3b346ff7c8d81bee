#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace calib {

// Environment variable naming the default TOML config file.
inline constexpr const char* kConfigEnv = "CALIBKIT_CONFIG";

// Runs the calibkit command line; args excludes the program name. Returns
// the process exit code (see ExitCode).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace calib
