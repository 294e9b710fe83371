#pragma once

#include <stdexcept>
#include <string>

namespace actev {

/// Thrown when a state leaves the admissible strain set of a capped law
/// (|D| >= M for the sharp or two-activation response).
class DomainViolation : public std::runtime_error {
  public:
    explicit DomainViolation(const std::string& what) : std::runtime_error(what) {}
};

/// Configuration or input-file problem; maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised inside a right-hand-side evaluation when a pointwise value is
/// non-finite; carries the name of the offending term.
class RhsError : public std::runtime_error {
  public:
    explicit RhsError(const std::string& term, const std::string& detail)
        : std::runtime_error("non-finite value in " + term + ": " + detail), term_(term) {}
    const std::string& term() const { return term_; }

  private:
    std::string term_;
};

}  // namespace actev
