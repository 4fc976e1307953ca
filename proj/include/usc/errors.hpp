#pragma once

#include <stdexcept>
#include <string>

namespace usc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operator or factor-space dimensions do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition was violated (non-Hermitian input, bad enum combination, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A linear solve failed; carries the reciprocal condition estimate that triggered it.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double rcond) : Error(what), rcond_(rcond) {}
  double rcond() const { return rcond_; }

 private:
  double rcond_;
};

/// Lossless response evaluated exactly on a real pole.
class PoleError : public Error {
 public:
  using Error::Error;
};

/// A numerical result failed a physical sanity check (degenerate kernel, negative spectrum, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration file, unknown preset or bad CLI value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace usc
