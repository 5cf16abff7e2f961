#pragma once

#include <stdexcept>
#include <string>

namespace defl {

/// Invalid physical or learning parameters (violated type invariant,
/// out-of-domain argument, degenerate model).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or invalid experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Simulation produced a non-finite iterate.
class DivergedError : public std::runtime_error {
 public:
  DivergedError(long round, const std::string& what)
      : std::runtime_error(what), round_(round) {}
  long round() const { return round_; }

 private:
  long round_;
};

/// An internal cross-check failed (analytic vs finite-difference mismatch).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace defl
