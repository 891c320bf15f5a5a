#pragma once

namespace spiritdiff {

// Full command-line surface behind a callable entry point, so tests can
// drive the tool in-process. Returns the process exit code: 0 success,
// 2 usage/config, 3 malformed data, 4 missing dependency input.
int cli_main(int argc, const char *const *argv);

}  // namespace spiritdiff
