#pragma once

#include <stdexcept>
#include <string>

namespace pvfreq {

/// Invalid configuration. `field()` carries the dotted path of the offending
/// value when one is known (e.g. "grid.penetration").
class ConfigError : public std::invalid_argument {
public:
  explicit ConfigError(const std::string& message, std::string field = {})
      : std::invalid_argument(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

/// A simulation produced a non-finite state.
class NumericalError : public std::runtime_error {
public:
  NumericalError(const std::string& variable, double t)
      : std::runtime_error("non-finite value in '" + variable + "' at t=" + std::to_string(t) + " s"),
        variable_(variable), t_(t) {}

  const std::string& variable() const noexcept { return variable_; }
  double time() const noexcept { return t_; }

private:
  std::string variable_;
  double t_;
};

namespace detail {

inline void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ConfigError(message, field);
}

}  // namespace detail
}  // namespace pvfreq
