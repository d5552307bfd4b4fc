#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fitolab/scenario.hpp"
#include "fitolab/sync.hpp"

namespace fitolab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFindings = 1;
inline constexpr int kExitUsage = 2;

/// `args` excludes the program name. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Built-in key (`S1`), built-in name (`concurrent-edit`) or a path to a scenario file.
/// Throws ParseError for a malformed file and std::invalid_argument when nothing matches.
[[nodiscard]] Scenario resolve_scenario(const std::string& ref);

/// Causal delivery on for the strategies that rely on it, off for timestamp LWW.
[[nodiscard]] bool native_causal_delivery(const Strategy& s);

/// Every built-in under every strategy and both modes. The table goes to the return value;
/// when `dir` is set, each run's trace and report are written there as well.
[[nodiscard]] std::string run_matrix(std::uint64_t seed, const std::filesystem::path* dir);

}  // namespace fitolab
