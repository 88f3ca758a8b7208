// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace seq2graph {

/// Raised when a caller breaks an operation's precondition (shapes, counts, indices).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// CSV parse failures; the message carries the row/column location.
class IngestionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Least-squares fits that cannot be solved (rank-deficient regressors).
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checkpoint or data schema mismatch.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values where finite ones are required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace seq2graph
