#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cfmimo {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A series did not meet its termination criterion within the term cap.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::size_t terms_used, double last_term)
      : std::runtime_error(what + " (terms used: " + std::to_string(terms_used) +
                           ", last term magnitude: " + std::to_string(last_term) + ")"),
        terms_used_(terms_used),
        last_term_(last_term) {}

  std::size_t terms_used() const noexcept { return terms_used_; }
  double last_term() const noexcept { return last_term_; }

 private:
  std::size_t terms_used_;
  double last_term_;
};

/// Adaptive quadrature exhausted its subdivision budget.
class ToleranceError : public std::runtime_error {
 public:
  ToleranceError(const std::string& what, double estimate, double error_bound)
      : std::runtime_error(what + " (estimate: " + std::to_string(estimate) +
                           ", error bound: " + std::to_string(error_bound) + ")"),
        estimate_(estimate),
        error_bound_(error_bound) {}

  double estimate() const noexcept { return estimate_; }
  double error_bound() const noexcept { return error_bound_; }

 private:
  double estimate_;
  double error_bound_;
};

/// A quantity that must be random (positive variance) or nonzero is degenerate.
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller violated an index-level precondition (e.g. wrong pilot relation).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Invalid scenario configuration; carries the offending field name.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace cfmimo
