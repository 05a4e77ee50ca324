#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace modeshift {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input that violates a schema, range, or configuration contract.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ValidationError {
 public:
  ParseError(std::size_t row, const std::string& what)
      : ValidationError("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class RangeError : public ValidationError {
 public:
  RangeError(std::string field, std::size_t row, const std::string& what)
      : ValidationError("row " + std::to_string(row) + ", field '" + field +
                        "': " + what),
        field_(std::move(field)),
        row_(row) {}
  const std::string& field() const { return field_; }
  std::size_t row() const { return row_; }

 private:
  std::string field_;
  std::size_t row_;
};

class DuplicateIdError : public ValidationError {
 public:
  explicit DuplicateIdError(const std::string& id)
      : ValidationError("duplicate id '" + id + "'"), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

// A model could not be fitted or an estimator's preconditions failed on data.
class EstimationError : public Error {
 public:
  using Error::Error;
};

class SeparationError : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

class CollinearityError : public EstimationError {
 public:
  explicit CollinearityError(std::vector<std::string> columns);
  const std::vector<std::string>& columns() const { return columns_; }

 private:
  std::vector<std::string> columns_;
};

}  // namespace modeshift
