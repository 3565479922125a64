// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace nastc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid shapes, group counts, hyperparameters, or genotypes.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf encountered, or training diverged.
class NumericError : public Error {
 public:
  using Error::Error;
};

// API misuse, e.g. backward() on a non-scalar or un-evaluated node.
class UsageError : public Error {
 public:
  using Error::Error;
};

class InternalError : public Error {
 public:
  using Error::Error;
};

// Malformed text document (genotype, arch, config). `location` is a JSON
// pointer or field path.
class ParseError : public Error {
 public:
  ParseError(std::string location, const std::string& message)
      : Error(location.empty() ? message : location + ": " + message),
        location_(std::move(location)) {}
  const std::string& location() const noexcept { return location_; }

 private:
  std::string location_;
};

// Malformed binary container (NTCF / NTCW).
class FormatError : public Error {
 public:
  FormatError(std::uint64_t offset, const std::string& message)
      : Error("at byte " + std::to_string(offset) + ": " + message),
        offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace nastc
