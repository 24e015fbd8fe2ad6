#pragma once

#include <stdexcept>
#include <string>

namespace lfn {

// Precondition violated on a numeric argument (e.g. alpha outside (0,1)).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Input has no spread or no mass where the operation needs one.
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IndexOutOfRange : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Config/file validation failure. `field` names the offending key or file.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class DimensionMismatch : public ValidationError {
 public:
  DimensionMismatch(const std::string& file_a, const std::string& file_b, const std::string& what)
      : ValidationError(file_a + " vs " + file_b, what), file_a_(file_a), file_b_(file_b) {}
  const std::string& first_file() const noexcept { return file_a_; }
  const std::string& second_file() const noexcept { return file_b_; }

 private:
  std::string file_a_;
  std::string file_b_;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lfn
