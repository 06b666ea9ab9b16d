#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stacklab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An action that cannot be applied to the current stack state.
class IllegalAction : public Error {
 public:
  using Error::Error;
};

/// Scenario sampling gave up after its retry budget.
class GenExhausted : public Error {
 public:
  using Error::Error;
};

/// A scenario has no completed stable stack.
class NoStableStack : public Error {
 public:
  using Error::Error;
};

/// A catalog is missing a prefix it must contain (usually a corrupted cache).
class BrokenCatalog : public Error {
 public:
  using Error::Error;
};

class UnknownTemplate : public Error {
 public:
  using Error::Error;
};

/// Plan text that does not match the plan grammar. `offset` is the byte
/// position in the input where parsing failed.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Network or HTTP failure while talking to a chat endpoint.
class EndpointError : public Error {
 public:
  using Error::Error;
};

class FixtureMismatch : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace stacklab
