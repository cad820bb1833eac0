#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace kzsparse {

/// Step-size presets whose theoretical preconditions do not hold.
class InfeasibleParameters : public std::invalid_argument {
 public:
  InfeasibleParameters(const std::string& what, std::size_t minimal_m)
      : std::invalid_argument(what), minimal_m_(minimal_m) {}

  /// Smallest row count for which the preset would be admissible.
  std::size_t minimal_m() const noexcept { return minimal_m_; }

 private:
  std::size_t minimal_m_;
};

/// A dense or enumerative oracle refused an instance above its size guard.
class GuardExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Experiment configuration failed validation; one message per offending field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

}  // namespace kzsparse
