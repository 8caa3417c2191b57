#pragma once

namespace memsteer::cli {

/// Entry point for the memsteer tool. Maps thrown errors onto exit codes:
/// 0 success, 2 config, 3 dependency, 4 transport, 5 budget, 1 anything else.
int run(int argc, char** argv);

}  // namespace memsteer::cli
