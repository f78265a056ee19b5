#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pcm {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `pcm` tool. Subcommands: gen, pipeline, mine, merge,
/// train, eval, occlude, export. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace pcm
