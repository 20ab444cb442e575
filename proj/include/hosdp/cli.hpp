#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hosdp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Entry point of the `hosdp` tool. `args` excludes the program name.
// Subcommands: synth, train, predict, eval, buckets.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hosdp
