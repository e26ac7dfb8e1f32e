// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gelforce {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input. Line and column are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(format(what, line, column)), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& what, std::size_t line, std::size_t column) {
    if (line == 0) return what;
    std::string s = "line " + std::to_string(line);
    if (column != 0) s += ", column " + std::to_string(column);
    return s + ": " + what;
  }

  std::size_t line_;
  std::size_t column_;
};

/// Structurally invalid model data (dangling ids, inverted elements, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Nonlinear solver failure.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Incompatible tensor or grid shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Binary/JSON file format problems (bad magic, truncation, missing entries).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Training diverged (non-finite loss).
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace gelforce
