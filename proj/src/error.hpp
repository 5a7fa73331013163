// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#pragma once

#include <stdexcept>
#include <string>

namespace tkgd {

enum class ErrorCode {
  kInvalidArgument = 1,
  kIo,
  kParse,
  kConfig,
  kCheckpoint,
  kNumeric,
  kLlmTransport,
  kLlmAuth,
  kInternal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

// Warnings go to stderr unless a test silences them.
void warn(const std::string& message);
void set_warnings_enabled(bool enabled);
/// Warnings raised so far, printed or not.
std::size_t warning_count();

}  // namespace tkgd
