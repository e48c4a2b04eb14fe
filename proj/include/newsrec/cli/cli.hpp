#pragma once

#include <iosfwd>

namespace newsrec::cli {

// Entry point behind the newsrec binary. Returns 0 on success, 1 when the
// engine fails and 2 on invalid usage. Help output exits 0.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace newsrec::cli
