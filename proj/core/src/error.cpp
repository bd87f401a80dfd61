//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molcpt/error.h"

namespace molcpt {

std::string_view category_name(ErrorCategory c) {
  switch (c) {
  case ErrorCategory::kUsage:
    return "usage";
  case ErrorCategory::kParse:
    return "parse";
  case ErrorCategory::kIo:
    return "io";
  case ErrorCategory::kData:
    return "data";
  case ErrorCategory::kShape:
    return "shape";
  case ErrorCategory::kNumeric:
    return "numeric";
  case ErrorCategory::kCheckpoint:
    return "checkpoint";
  }
  return "unknown";
}

}  // namespace molcpt
