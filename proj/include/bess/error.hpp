#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bess {

// Base of everything the library throws.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed text input; carries the 1-based line number.
class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

// Well-formed input that breaks a domain invariant.
class ValidationError : public Error {
public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
  using Error::Error;
};

// Voltage outside the window covered by the capability curves.
class OutOfRangeError : public Error {
public:
  using Error::Error;
};

// Requested discharge beyond the maximum power point of the battery circuit.
class InfeasiblePowerError : public Error {
public:
  using Error::Error;
};

class SocLimitError : public Error {
public:
  SocLimitError(double soc, const std::string& what) : Error(what), soc_(soc) {}
  double soc() const noexcept { return soc_; }

private:
  double soc_;
};

// SOC outside the band a parameter set was identified for.
class WrongBandError : public Error {
public:
  using Error::Error;
};

class InsufficientDataError : public Error {
public:
  using Error::Error;
};

class InputError : public Error {
public:
  using Error::Error;
};

}  // namespace bess
