#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tbger {

// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;
// Length of a time span in seconds.
using Duration = std::int64_t;

using PostId = std::int64_t;
using UserId = std::int64_t;

inline constexpr Duration kSecondsPerDay = 86400;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated operation precondition (caller bug or bad argument).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Malformed input document. `byte_offset` points into the source stream.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::int64_t byte_offset)
      : Error(what + " (at byte " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}
  explicit ParseError(const std::string& what) : Error(what) {}

  std::int64_t byte_offset() const { return byte_offset_; }

 private:
  std::int64_t byte_offset_ = -1;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Bad configuration or command-line usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

// Parses "YYYY-MM-DDTHH:MM:SS[.fff]" (optionally with a trailing 'Z') as UTC.
// Fractional seconds are discarded.
std::optional<Timestamp> parse_timestamp(std::string_view text);

// Formats as "YYYY-MM-DDTHH:MM:SS".
std::string format_timestamp(Timestamp t);

// 64-bit FNV-1a, used for config and corpus fingerprints.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

}  // namespace tbger
