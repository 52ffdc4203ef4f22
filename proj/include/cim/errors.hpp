#pragma once

#include <stdexcept>
#include <string>

namespace cim {

// Thrown when an enumeration guard (subset count, path count, 2^|E| law,
// C(n,K) search space) would be exceeded. Maps to CLI exit code 3.
struct GuardExceeded : std::runtime_error {
  explicit GuardExceeded(const std::string& what) : std::runtime_error(what) {}
};

// Edge-list / JSON input errors that carry a 1-based line number.
struct ParseError : std::runtime_error {
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line(line) {}
  int line;
};

}  // namespace cim
