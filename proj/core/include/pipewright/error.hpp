#pragma once

#include <stdexcept>
#include <string>

namespace pipewright {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed pipeline, catalog, specification or dataset document.
/// `location` points into the source (JSON path, DOT line, dataset line).
class ParseError : public Error {
 public:
  ParseError(std::string location, const std::string& message)
      : Error(location.empty() ? message : location + ": " + message),
        location_(std::move(location)) {}

  const std::string& location() const noexcept { return location_; }

 private:
  std::string location_;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

}  // namespace pipewright
