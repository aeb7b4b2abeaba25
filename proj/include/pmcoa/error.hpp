#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pmcoa {

// Base for every error raised by the library. Callers that only care about
// "something went wrong in the pipeline" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input (CSV, XML, JSON, binary). `location` is a row number, byte
// offset or similar, depending on the format; -1 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, long long location = -1)
      : Error(what), location_(location) {}
  long long location() const noexcept { return location_; }

 private:
  long long location_;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class ConflictError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class SecurityError : public Error {
 public:
  using Error::Error;
};

}  // namespace pmcoa
