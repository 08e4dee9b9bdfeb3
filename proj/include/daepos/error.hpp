#pragma once

#include <stdexcept>
#include <string>

namespace daepos {

// Error categories map onto the CLI exit codes: config 1, data 2, contract 3.

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or insufficient input data (bad files, empty datasets, folds too small).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Header-level problem with a tabular input.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

// A single data row could not be parsed; carries the 1-based data row index.
class RowError : public DataError {
 public:
  RowError(std::size_t row, const std::string& what)
      : DataError("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

// Caller violated an API precondition (width mismatch, bad argument).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace daepos
