//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLCPT_ERROR_H_
#define MOLCPT_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace molcpt {

enum class ErrorCategory {
  kUsage,
  kParse,
  kIo,
  kData,
  kShape,
  kNumeric,
  kCheckpoint,
};

std::string_view category_name(ErrorCategory c);

// Every failure raised by the library carries a category so the CLI can
// report a single-line, machine-greppable error.
class Error: public std::runtime_error {
public:
  Error(ErrorCategory category, const std::string &what)
      : std::runtime_error(what), category_(category) { }

  ErrorCategory category() const noexcept { return category_; }

private:
  ErrorCategory category_;
};

class ParseError: public Error {
public:
  ParseError(std::size_t position, const std::string &what)
      : Error(ErrorCategory::kParse,
              what + " at position " + std::to_string(position)),
        position_(position) { }

  std::size_t position() const noexcept { return position_; }

private:
  std::size_t position_;
};

}  // namespace molcpt

#endif  // MOLCPT_ERROR_H_
