#pragma once

#include <stdexcept>
#include <string>

namespace ein {

// Base class of every error the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed DFS code or graph structure.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Input outside an operation's domain (disconnected graph, unknown class, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), file_(file), line_(line) {}

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

// A configured resource cap (materialized pattern nodes) was exceeded.
class ResourceError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace ein
