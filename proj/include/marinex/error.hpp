#pragma once

#include <stdexcept>
#include <string>

namespace marinex {

// Raised when an input violates a documented invariant. `field()` names the
// offending value as a dotted path (e.g. "vessel.params.mass") when known.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& message, std::string field = {})
      : std::invalid_argument(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace marinex
