#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lncde {

// Shapes of two operands (or an operand and its declared spec) disagree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An input violates a documented precondition (e.g. exp of a non-Lie element).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Query outside the domain of a control or interpolant.
class DomainError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// A tensor handed to the Lyndon projection is not a Lie element.
class ProjectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Configuration is valid in general but not supported by this routine.
class UnsupportedError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Corrupt or mismatched file content.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(std::size_t step_index, const std::string& context = {})
      : std::runtime_error("non-finite state at solver step " + std::to_string(step_index) +
                           (context.empty() ? std::string{} : " (" + context + ")")),
        step_index_(step_index) {}

  std::size_t step_index() const noexcept { return step_index_; }

 private:
  std::size_t step_index_;
};

}  // namespace lncde
