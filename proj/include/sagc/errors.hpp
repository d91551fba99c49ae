// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sagc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor shapes; the message names both shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or hyperparameter (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input that makes an operation undefined (zero vector, constant volume).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// Caller broke a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf encountered during training or evaluation (CLI exit code 3).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed binary file. Carries the byte offset where decoding failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace sagc
