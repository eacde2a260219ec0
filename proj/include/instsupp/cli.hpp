#pragma once

#include <iosfwd>

namespace instsupp::cli {

/// Entry point of the `instsupp` tool. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace instsupp::cli
