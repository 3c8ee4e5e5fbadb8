// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace psytraj::cli {

// Subcommand dispatch (synth, train, encode, track, compare, inspect).
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric/divergence
// error. stdout carries one machine-readable JSON object per invocation;
// human diagnostics go to stderr.
int run(int argc, const char* const* argv);

}  // namespace psytraj::cli
