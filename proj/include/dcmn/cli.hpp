#pragma once

// The `dcmn` command line: simulate, train, evaluate, crossval, ablate and
// mobility subcommands over files in an output directory.

#include <filesystem>
#include <string>
#include <vector>

namespace dcmn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// Parses and runs one command. Never throws; the return value is the exit code.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

/// Writes `content` to a sibling temporary file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Applies DCMN_LOG (trace, debug, info, warn, error, off) to the logger.
void configure_logging();

}  // namespace dcmn::cli
