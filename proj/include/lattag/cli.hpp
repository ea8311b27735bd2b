#pragma once

namespace lattag {

// Entry point shared by the lattag binary and the in-process CLI tests.
// Exit codes: 0 success, 1 internal failure, 2 usage or input error.
int run_cli(int argc, const char* const* argv);

} // namespace lattag
