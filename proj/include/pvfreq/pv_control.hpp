#pragma once

// PV plant frequency-support controllers. Every controller consumes the
// measured frequency deviation (pu of f_N) and produces a power command in
// per unit of the plant's inverter capacity. Each `*_eval` returns the time
// derivative of its state (same shape as the state) plus the command.

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>

#include "pvfreq/blocks.hpp"
#include "pvfreq/errors.hpp"

namespace pvfreq {

// deadband -> low-pass -> washout -> gain -> limiter
struct InertiaCtrlParams {
  double db_pu = 0.0;
  double T_lpwi = 1.0;
  double T_wowi = 0.1;
  double K_i = 500.0;
  double p_limit = 0.05;
  bool db_step = false;
};

// deadband -> low-pass -> gain [-> lead-lag] -> limiter. K_g is on the
// (P_max - P_min) basis, so K_g = 20 is a 5% droop.
struct DroopCtrlParams {
  double db_pu = 0.0006;
  double T_lpwg = 1.0;
  double K_g = 15.0;
  double p_limit = 0.1;
  bool lead_lag = false;
  double T_wowg1 = 1.0;  // lead
  double T_wowg2 = 1.0;  // lag
  bool db_step = false;
};

struct AgcParams {
  double bias_b = 20.0;
  double kp = 0.5;
  double ki = 0.05;
  double t_enable = 20.0;
  double cycle_s = 0.0;  // 0 = continuous ACE, otherwise sample-and-hold period
};

struct FastPfcParams {
  DroopCtrlParams droop;
  double ki_fast = 10.0;
  double db_int_pu = 0.0006;
  double p_limit = 0.1;
  // Variant: decay the integral with time constant bleed_T while inside the band.
  bool bleed = false;
  double bleed_T = 10.0;
};

struct PlantControllers {
  std::optional<InertiaCtrlParams> inertia;
  std::optional<DroopCtrlParams> droop;
  std::optional<FastPfcParams> fast_pfc;
  bool agc = false;
};

struct PvPlant {
  std::string id;
  int area = 0;
  double c_inv = 1000.0;  // MVA
  double p_base = 0.8;
  double p_headroom = 0.1;
  PlantControllers controllers;
  double meas_noise_sigma = 0.0;
  double meas_bias = 0.0;  // constant measurement error, pu
};

inline void validate(const InertiaCtrlParams& p, const std::string& at) {
  check_deadband({p.db_pu}, at + ".db_pu");
  check_time_constant(p.T_lpwi, at + ".T_lpwi");
  check_time_constant(p.T_wowi, at + ".T_wowi");
  detail::require(std::isfinite(p.K_i) && p.K_i >= 0.0, at + ".K_i", "must be >= 0");
  detail::require(std::isfinite(p.p_limit) && p.p_limit >= 0.0, at + ".p_limit", "must be >= 0");
}

inline void validate(const DroopCtrlParams& p, const std::string& at) {
  check_deadband({p.db_pu}, at + ".db_pu");
  check_time_constant(p.T_lpwg, at + ".T_lpwg");
  detail::require(std::isfinite(p.K_g) && p.K_g >= 0.0, at + ".K_g", "must be >= 0");
  detail::require(std::isfinite(p.p_limit) && p.p_limit >= 0.0, at + ".p_limit", "must be >= 0");
  if (p.lead_lag) {
    detail::require(std::isfinite(p.T_wowg1) && p.T_wowg1 >= 0.0, at + ".T_wowg1", "must be >= 0");
    check_time_constant(p.T_wowg2, at + ".T_wowg2");
  }
}

inline void validate(const AgcParams& p, const std::string& at = "agc") {
  detail::require(std::isfinite(p.bias_b) && p.bias_b >= 0.0, at + ".bias_b", "must be >= 0");
  detail::require(std::isfinite(p.kp) && p.kp >= 0.0, at + ".kp", "must be >= 0");
  detail::require(std::isfinite(p.ki) && p.ki >= 0.0, at + ".ki", "must be >= 0");
  detail::require(std::isfinite(p.t_enable) && p.t_enable >= 0.0, at + ".t_enable", "must be >= 0");
  detail::require(std::isfinite(p.cycle_s) && p.cycle_s >= 0.0, at + ".cycle_s", "must be >= 0");
}

inline void validate(const FastPfcParams& p, const std::string& at) {
  validate(p.droop, at + ".droop");
  detail::require(std::isfinite(p.ki_fast) && p.ki_fast >= 0.0, at + ".ki_fast", "must be >= 0");
  check_deadband({p.db_int_pu}, at + ".db_int_pu");
  detail::require(std::isfinite(p.p_limit) && p.p_limit >= 0.0, at + ".p_limit", "must be >= 0");
  if (p.bleed) check_time_constant(p.bleed_T, at + ".bleed_T");
}

inline void validate(const PvPlant& p, const std::string& at) {
  using detail::require;
  require(std::isfinite(p.c_inv) && p.c_inv > 0.0, at + ".c_inv", "must be > 0");
  require(p.p_base >= 0.0 && p.p_base <= 1.0, at + ".p_base", "must lie in [0, 1]");
  require(p.p_headroom >= 0.0 && p.p_headroom <= 1.0 - p.p_base + 1e-12, at + ".p_headroom",
          "must lie in [0, 1 - p_base]");
  require(std::isfinite(p.meas_noise_sigma) && p.meas_noise_sigma >= 0.0, at + ".meas_noise_sigma", "must be >= 0");
  require(std::isfinite(p.meas_bias), at + ".meas_bias", "must be finite");
  const auto& c = p.controllers;
  if (c.inertia) {
    validate(*c.inertia, at + ".controllers.inertia");
    require(c.inertia->p_limit <= p.p_headroom, at + ".controllers.inertia.p_limit", "must not exceed p_headroom");
  }
  if (c.droop) validate(*c.droop, at + ".controllers.droop");
  if (c.fast_pfc) {
    require(!c.droop, at + ".controllers", "droop and fast_pfc are mutually exclusive (fast_pfc carries its own droop path)");
    validate(*c.fast_pfc, at + ".controllers.fast_pfc");
    require(c.fast_pfc->p_limit <= p.p_headroom, at + ".controllers.fast_pfc.p_limit", "must not exceed p_headroom");
  }
}

// ---------------------------------------------------------------------------
// Controller states

struct InertiaState {
  FirstOrderState lowpass;
  FirstOrderState washout;
};

struct DroopState {
  FirstOrderState lowpass;
  FirstOrderState lead_lag;
};

struct FastPfcState {
  DroopState droop;
  double integral = 0.0;
};

struct AgcState {
  PiState pi;
  double held_ace = 0.0;  // only used when cycle_s > 0
};

template <class State>
struct CtrlEval {
  State d;
  double p_cmd;
};

inline CtrlEval<InertiaState> inertia_ctrl_eval(const InertiaState& s, double df_meas, const InertiaCtrlParams& p) {
  CtrlEval<InertiaState> out{};
  const double u = deadband_apply(-df_meas, {p.db_pu, p.db_step});
  out.d.lowpass.x = lowpass_derivative(s.lowpass, u, p.T_lpwi);
  const auto wo = washout_output(s.washout, s.lowpass.x, p.T_wowi);
  out.d.washout.x = wo.dx;
  out.p_cmd = std::clamp(p.K_i * wo.y, -p.p_limit, p.p_limit);
  return out;
}

namespace detail {

struct DroopRaw {
  DroopState d;
  double y;
};

inline DroopRaw droop_path(const DroopState& s, double df_meas, const DroopCtrlParams& p) {
  DroopRaw out{};
  const double u = deadband_apply(-df_meas, {p.db_pu, p.db_step});
  out.d.lowpass.x = lowpass_derivative(s.lowpass, u, p.T_lpwg);
  out.y = p.K_g * s.lowpass.x;
  if (p.lead_lag) {
    const auto ll = lead_lag_output(s.lead_lag, out.y, p.T_wowg1, p.T_wowg2);
    out.d.lead_lag.x = ll.dx;
    out.y = ll.y;
  }
  return out;
}

}  // namespace detail

inline CtrlEval<DroopState> droop_ctrl_eval(const DroopState& s, double df_meas, const DroopCtrlParams& p) {
  auto raw = detail::droop_path(s, df_meas, p);
  return {raw.d, std::clamp(raw.y, -p.p_limit, p.p_limit)};
}

struct CombinedState {
  InertiaState inertia;
  DroopState droop;
};

/// Inertia and droop paths summed; the plant headroom clamp is applied by the
/// caller through apply_headroom.
inline CtrlEval<CombinedState> combined_ctrl_eval(const CombinedState& s, double df_meas, const InertiaCtrlParams& inertia,
                                                  const DroopCtrlParams& droop) {
  const auto a = inertia_ctrl_eval(s.inertia, df_meas, inertia);
  const auto b = droop_ctrl_eval(s.droop, df_meas, droop);
  return {{a.d, b.d}, a.p_cmd + b.p_cmd};
}

/// Area control error: tie-flow deviation plus frequency bias term.
inline double area_control_error(double df, double dp_tie, double bias_b) { return dp_tie + bias_b * df; }

/// PI on -ACE. `limit` is the plant's available headroom. With cycle_s > 0 the
/// ACE is taken from `s.held_ace`, refreshed by agc_sample at dispatch instants.
inline CtrlEval<AgcState> agc_ctrl_eval(const AgcState& s, double df_meas, double dp_tie, const AgcParams& p, double t,
                                        double limit) {
  CtrlEval<AgcState> out{};
  if (t < p.t_enable) return out;
  const double ace = p.cycle_s > 0.0 ? s.held_ace : area_control_error(df_meas, dp_tie, p.bias_b);
  const auto pi = pi_update(s.pi, -ace, p.kp, p.ki, limit);
  out.d.pi.integral = pi.d_integral;
  out.p_cmd = pi.y;
  return out;
}

/// Refreshes the held ACE when `t` falls on a dispatch instant. Returns true
/// when a sample was taken.
inline bool agc_sample(AgcState& s, double df_meas, double dp_tie, const AgcParams& p, double t, double dt) {
  if (p.cycle_s <= 0.0 || t < p.t_enable) return false;
  const double phase = std::fmod(t - p.t_enable, p.cycle_s);
  if (phase < 0.5 * dt || p.cycle_s - phase < 0.5 * dt) {
    s.held_ace = area_control_error(df_meas, dp_tie, p.bias_b);
    return true;
  }
  return false;
}

/// Droop path plus an integral path that only integrates outside its own
/// deadband, so farms with small measurement disagreements stop fighting once
/// frequency is back inside the band. The integral holds inside the band.
inline CtrlEval<FastPfcState> fast_pfc_eval(const FastPfcState& s, double df_meas, const FastPfcParams& p) {
  CtrlEval<FastPfcState> out{};
  const auto droop = droop_ctrl_eval(s.droop, df_meas, p.droop);
  out.d.droop = droop.d;
  const double e = deadband_apply(-df_meas, {p.db_int_pu});
  const double raw = droop.p_cmd + s.integral;
  out.p_cmd = std::clamp(raw, -p.p_limit, p.p_limit);
  const bool frozen = (raw > p.p_limit && e > 0.0) || (raw < -p.p_limit && e < 0.0);
  if (frozen) {
    out.d.integral = 0.0;
  } else if (e == 0.0 && p.bleed) {
    out.d.integral = -s.integral / p.bleed_T;
  } else {
    out.d.integral = p.ki_fast * e;
  }
  return out;
}

/// Clamps the plant's total output p_base + p_cmd to [0, p_base + p_headroom]
/// and returns the resulting increment.
inline double apply_headroom(double p_cmd, const PvPlant& plant) {
  const double total = std::clamp(plant.p_base + p_cmd, 0.0, plant.p_base + plant.p_headroom);
  return total - plant.p_base;
}

inline double to_system_base(double p_pu_inv, double c_inv, double c_system) {
  detail::require(c_inv > 0.0, "c_inv", "must be > 0");
  detail::require(c_system > 0.0, "c_system", "must be > 0");
  return p_pu_inv * c_inv / c_system;
}

// ---------------------------------------------------------------------------
// Whole-plant composition

/// All controller states of one plant. Unused controllers keep zero state.
struct PlantState {
  InertiaState inertia;
  DroopState droop;
  FastPfcState fast;
  AgcState agc;

  static constexpr std::size_t size = 8;

  static PlantState unpack(std::span<const double> v) {
    PlantState s;
    s.inertia.lowpass.x = v[0];
    s.inertia.washout.x = v[1];
    s.droop.lowpass.x = v[2];
    s.droop.lead_lag.x = v[3];
    s.fast.droop.lowpass.x = v[4];
    s.fast.droop.lead_lag.x = v[5];
    s.fast.integral = v[6];
    s.agc.pi.integral = v[7];
    return s;
  }

  void pack(std::span<double> v) const {
    v[0] = inertia.lowpass.x;
    v[1] = inertia.washout.x;
    v[2] = droop.lowpass.x;
    v[3] = droop.lead_lag.x;
    v[4] = fast.droop.lowpass.x;
    v[5] = fast.droop.lead_lag.x;
    v[6] = fast.integral;
    v[7] = agc.pi.integral;
  }

  static constexpr std::array<const char*, size> names = {
      "inertia.lowpass", "inertia.washout", "droop.lowpass", "droop.lead_lag",
      "fast_pfc.droop.lowpass", "fast_pfc.droop.lead_lag", "fast_pfc.integral", "agc.integral"};
};

struct PlantEval {
  PlantState d;
  double p_cmd = 0.0;  // sum of controller paths before the headroom clamp
  double p_inc = 0.0;  // increment actually delivered, pu on c_inv
  double p_agc = 0.0;  // AGC path share of p_cmd
};

inline PlantEval plant_eval(const PlantState& s, const PvPlant& plant, double df_meas, double dp_tie,
                            const AgcParams* agc, double t) {
  PlantEval out{};
  const auto& c = plant.controllers;
  if (c.inertia) {
    const auto r = inertia_ctrl_eval(s.inertia, df_meas, *c.inertia);
    out.d.inertia = r.d;
    out.p_cmd += r.p_cmd;
  }
  if (c.droop) {
    const auto r = droop_ctrl_eval(s.droop, df_meas, *c.droop);
    out.d.droop = r.d;
    out.p_cmd += r.p_cmd;
  }
  if (c.fast_pfc) {
    const auto r = fast_pfc_eval(s.fast, df_meas, *c.fast_pfc);
    out.d.fast = r.d;
    out.p_cmd += r.p_cmd;
  }
  if (c.agc && agc != nullptr) {
    const auto r = agc_ctrl_eval(s.agc, df_meas, dp_tie, *agc, t, plant.p_headroom);
    out.d.agc.pi = r.d.pi;
    out.p_cmd += r.p_cmd;
    out.p_agc = r.p_cmd;
  }
  out.p_inc = apply_headroom(out.p_cmd, plant);
  return out;
}

}  // namespace pvfreq
