#pragma once

namespace abreu::io {

/// Command-line front end: argv[1] is the command, then --key value flags and
/// an optional --config file.json. Returns the process exit code; never throws.
int run_cli(int argc, const char* const* argv);

}  // namespace abreu::io
