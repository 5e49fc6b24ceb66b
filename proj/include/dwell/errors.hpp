#pragma once

#include <stdexcept>
#include <string>

namespace dwell {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Table or system parameters outside the family's valid range.
class InvalidParams : public Error {
 public:
  using Error::Error;
};

/// A ray left the table without hitting any segment (a leak in the boundary chain).
class NoIntersection : public Error {
 public:
  using Error::Error;
};

/// A box-counting or doubling study moved by more than its own uncertainty.
class NotConverged : public Error {
 public:
  using Error::Error;
};

class ExcessCensoring : public Error {
 public:
  using Error::Error;
};

class InsufficientTail : public Error {
 public:
  using Error::Error;
};

class NoOpening : public Error {
 public:
  using Error::Error;
};

class NoOpenChannel : public Error {
 public:
  using Error::Error;
};

class EscapeOutOfBox : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace dwell
