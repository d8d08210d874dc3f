#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gscreen {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Expression layer -----------------------------------------------------------

struct ExprError : Error {
  std::size_t offset;  // byte offset of the first offending character
  ExprError(const std::string& msg, std::size_t off)
      : Error(msg + " (at offset " + std::to_string(off) + ")"), offset(off) {}
};

struct SyntaxError : ExprError {
  using ExprError::ExprError;
};

struct UnknownVariableError : ExprError {
  using ExprError::ExprError;
};

struct ArityError : ExprError {
  using ExprError::ExprError;
};

struct DomainError : Error {
  using Error::Error;
};

struct NonFiniteError : Error {
  using Error::Error;
};

// Numerics and solvers --------------------------------------------------------

struct OutOfRangeError : Error {
  using Error::Error;
};

struct NoConvergenceError : Error {
  using Error::Error;
};

struct LeftDomainError : Error {
  using Error::Error;
};

struct RankDeficientError : Error {
  using Error::Error;
};

struct FamilyMismatchError : Error {
  using Error::Error;
};

struct SingularDenominatorError : Error {
  using Error::Error;
};

struct TooLargeError : Error {
  using Error::Error;
};

struct GridTooSmallError : Error {
  using Error::Error;
};

struct InfeasibleError : Error {
  using Error::Error;
};

struct InputError : Error {
  using Error::Error;
};

}  // namespace gscreen
