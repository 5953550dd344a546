#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kgap {

// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input that cannot be recovered from. Carries the byte offset of
// the failure in the source stream.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at byte " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// A single record (or asset) violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A template slot could not be filled from the available path data.
class PopulationError : public Error {
 public:
  PopulationError(const std::string& slot, std::size_t index)
      : Error("cannot fill " + slot + " slot #" + std::to_string(index)),
        slot_(slot),
        index_(index) {}

  const std::string& slot() const { return slot_; }
  std::size_t index() const { return index_; }

 private:
  std::string slot_;
  std::size_t index_;
};

}  // namespace kgap
