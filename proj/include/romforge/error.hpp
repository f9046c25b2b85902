#pragma once

#include <stdexcept>
#include <string>

namespace romforge {

/// Invalid input configuration (bad grid, CFL violation, unknown config key...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not match (vector lengths, operator dimensions).
class DimensionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// A numerical procedure failed (solver non-convergence, rank deficiency...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or truncated binary file.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Filesystem failure.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace romforge
