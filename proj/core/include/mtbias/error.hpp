// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mtbias Authors

#pragma once

#include <stdexcept>
#include <string>

namespace mtbias {

/// Raised when an input violates a documented precondition or invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised on unreadable or unwritable files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mtbias
