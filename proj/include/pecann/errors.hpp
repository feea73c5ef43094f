#pragma once

#include <stdexcept>
#include <string>

namespace pecann {

/// Invalid sizes, ranges or names supplied by the caller.
class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical evaluation produced a non-finite value. `term()` names the
/// objective or constraint group that produced it.
class EvaluationError : public std::runtime_error {
 public:
  explicit EvaluationError(const std::string& message, std::string term = {})
      : std::runtime_error(term.empty() ? message : term + ": " + message),
        term_(std::move(term)) {}

  const std::string& term() const noexcept { return term_; }

 private:
  std::string term_;
};

}  // namespace pecann
