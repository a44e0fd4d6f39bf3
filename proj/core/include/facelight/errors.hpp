#pragma once

#include <stdexcept>
#include <string>

namespace facelight {

/// Bad or inconsistent input data: unreadable files, malformed manifests,
/// violated preconditions. Maps to CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// A broken internal invariant. Maps to CLI exit code 3.
class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace facelight
