#pragma once

#include <stdexcept>
#include <string>

namespace riskelicit {

// Input outside the mathematical domain of an operation (bad level, a > b, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A precondition that depends on earlier computation failed (stale cache, negative regret).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed or inconsistent configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace riskelicit
