#pragma once

#include <stdexcept>
#include <string>

namespace videoservice {

// Base of every error the service raises. Callers that only need to log
// catch this; callers that implement a policy catch the specific kind.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid geometry, out-of-range setting, malformed config value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// The buffer pool has no free slot; the caller skips the tick.
class ExhaustedError : public Error {
 public:
  using Error::Error;
};

// A lease was used after release, or a (handle, offset) pair names nothing.
class LifetimeError : public Error {
 public:
  using Error::Error;
};

// An encoder backend already holds its maximum number of in-flight frames.
class BackpressureError : public Error {
 public:
  using Error::Error;
};

// A hardware backend or capture device is not present on this machine.
class UnavailableError : public Error {
 public:
  using Error::Error;
};

// A caller broke an operation's precondition (e.g. frame geometry mismatch).
class ContractError : public Error {
 public:
  using Error::Error;
};

// The oracle decoder met a syntax element it does not handle.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// Listening socket could not be opened.
class StartupError : public Error {
 public:
  using Error::Error;
};

}  // namespace videoservice
