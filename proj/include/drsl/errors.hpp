#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace drsl {

// Base class for every error thrown by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor/matrix shape disagreement. Message carries both shapes.
struct DimensionError : Error {
  using Error::Error;
};

// Invalid or inconsistent configuration (bad dims, k > points, ...).
struct ConfigError : Error {
  using Error::Error;
};

// Malformed binary file. `offset` is the byte position of the failure.
struct FormatError : Error {
  FormatError(const std::string& msg, uint64_t offset)
      : Error(msg + " (byte offset " + std::to_string(offset) + ")"),
        offset(offset) {}
  uint64_t offset;
};

// Dataset/manifest problems: missing files, bad labels, bad splits.
struct DataError : Error {
  using Error::Error;
};

struct MissingSlideError : Error {
  explicit MissingSlideError(const std::string& slide_id)
      : Error("unknown slide id: " + slide_id), slide_id(slide_id) {}
  std::string slide_id;
};

// Bad operation input that is not a shape problem (duplicate indices, ...).
struct InputError : Error {
  using Error::Error;
};

struct IndexError : Error {
  using Error::Error;
};

struct MetricError : Error {
  using Error::Error;
};

// NaN/Inf detected at an op boundary; message names the op and node id.
struct NumericError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// Operator-facing command line / config file mistake; maps to exit code 2.
struct UsageError : Error {
  using Error::Error;
};

}  // namespace drsl
