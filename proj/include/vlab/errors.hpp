#pragma once

#include <stdexcept>
#include <string>

namespace vlab {

// Bad inputs: shapes, domains, parameter ranges, malformed scenarios.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// An iterative solver or factorization failed to meet its contract.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// Memory budget or grid resolution limits exceeded.
class ResourceError : public std::runtime_error {
 public:
  explicit ResourceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace vlab
