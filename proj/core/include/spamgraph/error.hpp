#pragma once

#include <stdexcept>
#include <string>

namespace spamgraph {

// Base class for every error raised by the library. Callers that only care
// about "something in spamgraph failed" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data (corpus rows, JSON documents, binary files).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Arguments that violate an operation's preconditions.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Non-finite values showing up in a numerical pipeline.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Remote service failures (after retries are exhausted).
class ServiceError : public Error {
 public:
  using Error::Error;
};

}  // namespace spamgraph
