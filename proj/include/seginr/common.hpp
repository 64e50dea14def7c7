#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace seginr {

inline constexpr const char* kVersion = "0.1.0";

// Discrete symbol id. Input tokens, output tokens, and joint-space classes
// (output tokens plus the end-of-segment class) all use this type.
using TokenId = std::int32_t;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LengthMismatch : Error { using Error::Error; };
struct PadTooSmall : Error { using Error::Error; };
struct NonFinite : Error { using Error::Error; };
struct BadClass : Error { using Error::Error; };
struct BadToken : Error { using Error::Error; };
struct BadDistribution : Error { using Error::Error; };
struct BadMagic : Error { using Error::Error; };
struct BadVersion : Error { using Error::Error; };
struct TruncatedFile : Error { using Error::Error; };

// Filesystem-level failure (open/read/write), as opposed to invalid content.
struct IoError : Error { using Error::Error; };

struct NonFiniteLoss : Error {
  std::int64_t step;
  explicit NonFiniteLoss(std::int64_t at_step)
      : Error("non-finite loss at step " + std::to_string(at_step)), step(at_step) {}
};

struct ParseError : Error {
  std::size_t line;
  std::size_t column;
  ParseError(const std::string& message, std::size_t line_no, std::size_t col_no)
      : Error("line " + std::to_string(line_no) + ", column " + std::to_string(col_no) +
              ": " + message),
        line(line_no),
        column(col_no) {}
};

}  // namespace seginr
