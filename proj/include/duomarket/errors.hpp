#ifndef DUOMARKET_ERRORS_HPP
#define DUOMARKET_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace duomarket {

/// Argument outside the mathematical domain of an operation (e.g. a non-positive price).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Input data violates a type invariant (tied alphas, empty market, coincident positions...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Caller broke an operation's precondition.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A property guaranteed by the theory did not hold. Always a bug or a numeric breakdown.
class InternalInvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Iterative solver hit its iteration cap.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The optimal price ratio landed on some alpha_k; the equilibrium there is not covered.
class DegenerateBoundary : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Instance too large for a brute-force oracle.
class CapExceeded : public std::length_error {
 public:
  using std::length_error::length_error;
};

}  // namespace duomarket

#endif  // DUOMARKET_ERRORS_HPP
