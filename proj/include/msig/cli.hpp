#pragma once

namespace msig {

// Entry point behind main(); returns the process exit code.
// 0 success, 2 invalid input or model error, 3 filesystem error.
int run_cli(int argc, char** argv);

}  // namespace msig
