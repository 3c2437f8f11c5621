#pragma once

#include <iosfwd>

namespace dynroc::cli {

/// Entry point for the `dynroc` tool. Returns the process exit code; on
/// failure writes a single `error: <kind>: <message>` line to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dynroc::cli
