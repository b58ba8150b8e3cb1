#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace texpaint {

/// Output directory used when --out is not given.
inline constexpr const char *kOutputEnv = "TEXPAINT_OUT";

/// Runs the command line `args` (without the program name). Returns the
/// process exit status; failures print a single line to `err`.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace texpaint
