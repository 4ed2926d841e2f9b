#pragma once

// Continuous-time signal blocks written as explicit state + derivative +
// output, so any fixed-step integrator can advance them. Every block's state
// is zero at the flat-frequency equilibrium.

#include <algorithm>
#include <cmath>
#include <string>

#include "pvfreq/errors.hpp"

namespace pvfreq {

struct Deadband {
  double half_width = 0.0;
  // Step (non-offset) variant: passes u unchanged once outside the band.
  bool step = false;
};

/// Offset deadband: zero inside [-hw, hw], sign(u)*(|u| - hw) outside.
/// The step variant is discontinuous at the band edge.
inline double deadband_apply(double u, const Deadband& db) {
  const double mag = std::abs(u);
  if (mag <= db.half_width) return 0.0;
  if (db.step) return u;
  return std::copysign(mag - db.half_width, u);
}

inline void check_deadband(const Deadband& db, const std::string& field) {
  detail::require(std::isfinite(db.half_width) && db.half_width >= 0.0, field, "deadband half width must be >= 0");
}

inline void check_time_constant(double T, const std::string& field) {
  detail::require(std::isfinite(T) && T > 0.0, field, "time constant must be > 0");
}

struct FirstOrderState {
  double x = 0.0;
};

/// Low-pass 1/(1+sT). Output is the state itself.
inline double lowpass_derivative(const FirstOrderState& s, double u, double T) { return (u - s.x) / T; }

struct BlockOutput {
  double dx;
  double y;
};

/// Washout sT/(1+sT). A ramp of slope m settles to y = m*T.
inline BlockOutput washout_output(const FirstOrderState& s, double u, double T) {
  return {(u - s.x) / T, u - s.x};
}

/// Lead-lag (1+s*T_lead)/(1+s*T_lag); identity when the two are equal.
inline BlockOutput lead_lag_output(const FirstOrderState& s, double u, double T_lead, double T_lag) {
  const double dx = (u - s.x) / T_lag;
  return {dx, s.x + T_lead * dx};
}

/// Clamp to [lo, hi]. Throws ConfigError when lo > hi.
inline double limiter(double u, double lo, double hi) {
  if (lo > hi) throw ConfigError("limiter lower bound exceeds upper bound");
  return std::clamp(u, lo, hi);
}

struct PiState {
  double integral = 0.0;
  bool frozen = false;
};

struct PiOutput {
  double d_integral;
  double y;
  bool frozen;
};

// Conditional integration: the integrator stops while the output sits on a
// limit and the error would drive it further past that limit.
inline PiOutput pi_update(const PiState& s, double e, double kp, double ki, double limit) {
  const double raw = kp * e + s.integral;
  const double y = std::clamp(raw, -limit, limit);
  const bool frozen = (raw > limit && e > 0.0) || (raw < -limit && e < 0.0);
  return {frozen ? 0.0 : ki * e, y, frozen};
}

}  // namespace pvfreq
