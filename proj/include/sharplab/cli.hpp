#pragma once

#include <iosfwd>

namespace sharplab {

/// Entry point of the `sharplab` tool. Exit codes: 0 success, 1 usage or
/// config error, 2 runtime failure. Written output paths go to `out`, every
/// diagnostic to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sharplab
