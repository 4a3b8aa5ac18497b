#pragma once

#include <stdexcept>
#include <string>

namespace mixda {

// Tensor shape violations (mismatched extents, non-scalar loss, ...).
class DimensionError : public std::runtime_error {
 public:
  explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

// Bad run configuration: unknown keys, invalid values, incompatible modules.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Bad input data: malformed corpus files, missing templates, label range.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Checkpoint file problems, with a distinct code per failure kind.
class CheckpointError : public std::runtime_error {
 public:
  enum class Code { io, bad_magic, truncated, malformed, shape_mismatch };

  CheckpointError(Code code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

}  // namespace mixda
