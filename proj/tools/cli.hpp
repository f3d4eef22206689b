#ifndef NEVIL_TOOLS_CLI_HPP_
#define NEVIL_TOOLS_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace nevil {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Entry point of the `nevil` tool; returns the process exit status.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nevil

#endif  // NEVIL_TOOLS_CLI_HPP_
