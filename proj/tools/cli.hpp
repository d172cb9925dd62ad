#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace sca::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumerical = 2;

/// Runs one `sca` subcommand. `args` excludes the program name. Data goes to
/// files only; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& err);

} // namespace sca::cli
