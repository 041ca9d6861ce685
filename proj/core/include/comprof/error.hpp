#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace comprof {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by ingestion and config parsing; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& message)
      : Error(file + ":" + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace comprof
