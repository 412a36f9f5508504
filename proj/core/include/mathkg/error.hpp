#pragma once

#include <stdexcept>
#include <string>

namespace mathkg {

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file; `line` is 1-based (0 when unknown).
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// An id that does not resolve against the graph or an embedding table.
class NotFoundError : public Error {
 public:
  explicit NotFoundError(const std::string& id) : Error("unknown id: " + id), id_(id) {}

  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

/// Violated operation precondition (bad argument rather than bad data).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace mathkg
