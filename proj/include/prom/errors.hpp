#ifndef PROM_ERRORS_HPP
#define PROM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace prom {

// Invalid data fed to an operation: shape mismatches, non-finite samples,
// malformed files. CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Bad configuration values or unknown config keys. CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A metric is undefined for the given inputs (e.g. zero-norm target).
class MetricError : public ValidationError {
 public:
  explicit MetricError(const std::string& what) : ValidationError(what) {}
};

}  // namespace prom

#endif  // PROM_ERRORS_HPP
