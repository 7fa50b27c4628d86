#pragma once

#include <stdexcept>
#include <string>

namespace mlego {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller supplied something malformed (bad predicate, out-of-range alpha, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

// On-disk state does not match what we expect to read back.
class CorruptData : public Error {
 public:
  using Error::Error;
};

}  // namespace mlego
