#pragma once

namespace pcts::cli {

// Runs the full command line interface. Exit codes: 0 success, 1 internal
// failure, 2 usage or resource error.
int run(int argc, const char* const* argv);

}  // namespace pcts::cli
