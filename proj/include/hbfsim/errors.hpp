#pragma once

#include <stdexcept>
#include <string>

namespace hbfsim {

// Every failure raised by the library derives from Error. The CLI maps the
// concrete type onto its exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition violation by the caller (bad k, m not dividing D, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated file, unreadable path.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Vector id outside the stored range of a layout.
class AddressError : public Error {
 public:
  using Error::Error;
};

// Invalid calibration/config content or model parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Experiment inputs missing (e.g. no ground truth).
class SetupError : public Error {
 public:
  using Error::Error;
};

}  // namespace hbfsim
