#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace chartrans::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// `args` excludes the program name: {"synth", "--seed", "7", ...}.
// The JSON summary goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Reads `key = value` lines ('#' starts a comment) into flag arguments.
// `true`/`false` values toggle flags; anything else becomes `--key value`.
std::vector<std::string> config_arguments(const std::string& path);

}  // namespace chartrans::cli
