#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace locgauss {

// Parameter outside its admissible domain (negative scale, level not in (0,1), ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input vector/matrix dimensions incompatible with the requested block layout.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A leave-out volatility estimate needed as a denominator is zero.
class DegenerateVolatilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// No increment survived truncation, so the empirical CDF is undefined.
class EmptyStatisticError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AccuracyError : public std::runtime_error {
 public:
  AccuracyError(const std::string& what, double achieved)
      : std::runtime_error(what + " (achieved error estimate " + std::to_string(achieved) + ")"),
        achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateSlotError : public DataError {
 public:
  using DataError::DataError;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace locgauss
