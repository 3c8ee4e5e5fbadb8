// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace psytraj {

// Error taxonomy shared across the library. The CLI maps categories to exit
// codes: bad argv -> 1, bad input data -> 2, numeric failures -> 3.
enum class errc {
  parse,
  empty_input,
  insufficient_data,
  shape_mismatch,
  parameter,
  missing_channel,
  degenerate,
  rank_deficient,
  nonfinite,
  divergence,
  io,
  integrity,
  version_mismatch,
  contract,
};

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const { return code_; }
  bool numeric() const { return code_ == errc::divergence || code_ == errc::nonfinite; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw error(code, what); }

}  // namespace psytraj
