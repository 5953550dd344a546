#pragma once

#include <string>
#include <vector>

namespace kgap::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kInputError = 1;
inline constexpr int kUsageError = 2;

// Runs one `kgap` invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args);

}  // namespace kgap::cli
