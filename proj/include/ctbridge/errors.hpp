#pragma once

#include <stdexcept>
#include <string>

namespace ctbridge {

// Argument or state outside an operation's domain: bad shapes, times outside
// [0, T], negative weights, unknown enum names.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A computation produced a non-finite value or could not proceed numerically.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what, int step = -1)
      : std::runtime_error(what), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

// Malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// I/O failure on artifact files or the predictor child process.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ctbridge
