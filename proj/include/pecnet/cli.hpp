#pragma once

#include <iosfwd>

namespace pecnet {

// Entry point of the `pecnet` tool: generate | train | eval | predict.
// Errors go to `err` as one `error:<category>: message` line; the return
// value is the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pecnet
