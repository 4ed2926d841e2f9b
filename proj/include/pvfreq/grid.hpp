#pragma once

// Aggregated system frequency response model. Frequency deviation `df` is in
// per unit of f_N; powers are per unit on the area's C_system base unless a
// name says otherwise.

#include <cmath>
#include <string>

#include "pvfreq/blocks.hpp"
#include "pvfreq/errors.hpp"

namespace pvfreq {

/// Two-stage governor/reheat surrogate for the synchronous fleet. Powers are
/// per unit of the fleet's own capacity.
struct GovernorParams {
  bool enabled = true;
  double R = 0.05;
  double T_g = 0.5;
  double T_rh = 7.0;
  double F_h = 0.3;
  double deadband_hz = 0.036;
  double p_max = 0.10;
};

struct GridParams {
  double f_N = 60.0;
  double C_system = 68750.0;  // MVA; a 2750 MW trip is exactly 0.04 pu
  double H_base = 5.0;
  double D = 1.0;
  double penetration = 0.0;
  GovernorParams gov;
  double ufls_hz = 59.3;
};

struct TieLine {
  double T_tie = 2.0;
  double scheduled_flow = 0.0;
};

struct ContingencyEvent {
  double t_event = 0.0;
  double delta_p = 0.0;  // negative = generation loss
  int area = 0;
};

inline void validate(const GovernorParams& g, const std::string& at) {
  using detail::require;
  require(std::isfinite(g.R) && g.R > 0.0, at + ".R", "droop must be > 0");
  check_time_constant(g.T_g, at + ".T_g");
  check_time_constant(g.T_rh, at + ".T_rh");
  require(g.F_h >= 0.0 && g.F_h <= 1.0, at + ".F_h", "must lie in [0, 1]");
  require(g.deadband_hz >= 0.0, at + ".deadband_hz", "must be >= 0");
  require(std::isfinite(g.p_max) && g.p_max >= 0.0, at + ".p_max", "must be >= 0");
}

inline void validate(const GridParams& p, const std::string& at = "grid") {
  using detail::require;
  require(std::isfinite(p.f_N) && p.f_N > 0.0, at + ".f_N", "must be > 0");
  require(std::isfinite(p.C_system) && p.C_system > 0.0, at + ".C_system", "must be > 0");
  require(std::isfinite(p.H_base) && p.H_base > 0.0, at + ".H_base", "must be > 0");
  require(std::isfinite(p.D) && p.D >= 0.0, at + ".D", "must be >= 0");
  require(p.penetration >= 0.0 && p.penetration < 1.0, at + ".penetration", "must lie in [0, 1)");
  require(std::isfinite(p.ufls_hz) && p.ufls_hz > 0.0, at + ".ufls_hz", "must be > 0");
  validate(p.gov, at + ".gov");
}

inline void validate(const TieLine& tie, const std::string& at = "tie") {
  detail::require(std::isfinite(tie.T_tie) && tie.T_tie > 0.0, at + ".T_tie", "must be > 0");
}

inline void validate(const ContingencyEvent& e, const std::string& at) {
  detail::require(std::isfinite(e.t_event) && e.t_event >= 0.0, at + ".t_event", "must be >= 0");
  detail::require(std::isfinite(e.delta_p), at + ".delta_p", "must be finite");
}

/// Initial rate of change of frequency (Hz/s) after a power imbalance of
/// `p_imbalance_mw` on a system of `c_system_mva` with inertia `h_system_s`.
inline double rocof_from_imbalance(double p_imbalance_mw, double c_system_mva, double h_system_s, double f_n_hz) {
  detail::require(c_system_mva > 0.0, "c_system", "must be > 0");
  detail::require(h_system_s > 0.0, "h_system", "must be > 0");
  detail::require(f_n_hz > 0.0, "f_n", "must be > 0");
  return (p_imbalance_mw / c_system_mva) / (2.0 * h_system_s) * f_n_hz;
}

/// Synchronous-fleet share of the system; inertia and governor capacity both
/// scale with it.
inline double synchronous_fraction(const GridParams& p) {
  detail::require(p.penetration >= 0.0 && p.penetration < 1.0, "grid.penetration", "must lie in [0, 1)");
  return 1.0 - p.penetration;
}

inline double effective_inertia(const GridParams& p) { return p.H_base * synchronous_fraction(p); }

/// d(df)/dt in pu/s for the single-bus swing equation with load damping.
inline double swing_derivative(double df, double p_mech, double p_pv, double p_event, const GridParams& p) {
  return (p_mech + p_pv + p_event - p.D * df) / (2.0 * effective_inertia(p));
}

struct GovernorState {
  FirstOrderState valve;
  FirstOrderState reheat;
};

struct GovernorEval {
  double d_valve;
  double d_reheat;
  double p_mech;  // pu on fleet base
};

/// Valve command deadband(-df)/R clamped to +-p_max, a T_g lag, then a reheat
/// stage whose high-pressure fraction F_h passes straight through.
inline GovernorEval governor_derivatives(const GovernorState& s, double df, const GovernorParams& g, double f_n = 60.0) {
  if (!g.enabled) return {0.0, 0.0, 0.0};
  const double db_pu = g.deadband_hz / f_n;
  const double cmd = std::clamp(deadband_apply(-df, {db_pu}) / g.R, -g.p_max, g.p_max);
  const double d_valve = lowpass_derivative(s.valve, cmd, g.T_g);
  const double d_reheat = lowpass_derivative(s.reheat, s.valve.x, g.T_rh);
  return {d_valve, d_reheat, g.F_h * s.valve.x + (1.0 - g.F_h) * s.reheat.x};
}

/// Tie-line flow deviation dynamics; the faster area exports.
inline double tie_line_derivative([[maybe_unused]] double dp_tie, double df_a, double df_b, const TieLine& tie) {
  return tie.T_tie * (df_a - df_b);
}

}  // namespace pvfreq
