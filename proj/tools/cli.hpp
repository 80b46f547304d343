#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace handgen::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitUsage = 64;

/// Prefix of the environment overrides, e.g. HANDGEN_SEED for --seed.
inline constexpr const char* kEnvPrefix = "HANDGEN_";

std::string version_string();

/// `args` excludes the program name. Precedence per option: command line,
/// then environment, then the --config JSON, then the built-in default.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace handgen::cli
