// Copyright upsim contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace upsim {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A simplex whose measure is at or below the degeneracy threshold was used
/// where a non-degenerate one is required.
class DegenerateSimplexError : public Error {
 public:
  using Error::Error;
};

/// A clock was read at a time before its last synchronization.
class ClockDomainError : public Error {
 public:
  using Error::Error;
};

/// A beacon body is not representable in the canonical wire encoding.
class EncodingOverflowError : public Error {
 public:
  using Error::Error;
};

/// Bytes presented as a beacon encoding do not parse.
class MalformedEncodingError : public Error {
 public:
  using Error::Error;
};

/// A broadcast carries an emission timestamp later than its receipt time.
class FutureTimestampError : public Error {
 public:
  using Error::Error;
};

/// Fewer observations than unknowns.
class UnderdeterminedError : public Error {
 public:
  using Error::Error;
};

/// The position solver did not reach its gradient tolerance within the
/// iteration budget.
class NoConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Station geometry (or a normal matrix derived from it) is singular to
/// working precision.
class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
};

/// An attack specification asks for a delivery earlier than physics allows.
class CausalityViolationError : public Error {
 public:
  using Error::Error;
};

/// A scenario cannot be expressed for both protocols side by side.
class ComparisonUnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Scenario input failed validation. `field_path` names the offending field,
/// e.g. "attacks[0].delay".
class ValidationError : public Error {
 public:
  ValidationError(std::string field_path, const std::string& message)
      : Error(field_path.empty() ? message : field_path + ": " + message),
        field_path_(std::move(field_path)) {}

  const std::string& field_path() const { return field_path_; }

 private:
  std::string field_path_;
};

}  // namespace upsim
