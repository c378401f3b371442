#pragma once

#include <stdexcept>
#include <string>

namespace pilot {

/// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A documented precondition was broken by the caller.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Non-finite values reached the optimizer (gradients, loss, policy state).
class SignalCorruption : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent config / policy coefficient file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed dataset files or impossible dataset contents.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A training run produced a non-finite loss and was aborted.
class DivergedError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failures (missing files, unwritable outputs).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace pilot
