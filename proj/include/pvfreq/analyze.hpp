#pragma once

// Post-processing of simulation results: frequency metrics, the virtual
// inertia characterization harness, step-response compliance and the
// multi-farm conflict index.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pvfreq/errors.hpp"
#include "pvfreq/pv_control.hpp"
#include "pvfreq/rk4.hpp"
#include "pvfreq/simulate.hpp"

namespace pvfreq {

struct Metrics {
  double nadir_hz = 0.0;
  double t_nadir = 0.0;
  double settling_hz = 0.0;
  double rocof_max_hzps = 0.0;
  bool ufls_crossed = false;
  double fr_measure = 0.0;  // MW per 0.1 Hz; NaN when settling deviation is zero
};

struct MetricsOptions {
  double tail_window = 5.0;
  double rocof_window = 0.5;
};

namespace detail {

inline std::size_t window_samples(std::span<const double> t, double window, const char* what) {
  require(window > 0.0, what, "window must be > 0");
  require(t.size() >= 2, what, "series too short");
  const double ds = t[1] - t[0];
  const auto w = static_cast<std::size_t>(std::llround(window / ds));
  require(w >= 1 && w < t.size(), what, "window longer than series");
  return w;
}

}  // namespace detail

/// Largest |slope| of `f` over sliding windows of `window` seconds.
inline double max_windowed_slope(std::span<const double> t, std::span<const double> f, double window) {
  const std::size_t w = detail::window_samples(t, window, "rocof_window");
  double best = 0.0;
  for (std::size_t i = 0; i + w < t.size(); ++i) best = std::max(best, std::abs((f[i + w] - f[i]) / (t[i + w] - t[i])));
  return best;
}

inline Metrics compute_metrics(const SimResult& r, double t_event, double tail_window, double rocof_window) {
  detail::require(!r.t.empty() && r.t.front() <= t_event && r.t.back() >= t_event, "t_event",
                  "result does not cover the event time");
  Metrics m;
  const std::size_t w_tail = detail::window_samples(r.t, tail_window, "tail_window");
  m.rocof_max_hzps = max_windowed_slope(r.t, r.f_hz, rocof_window);

  m.nadir_hz = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < r.t.size(); ++i) {
    if (r.t[i] < t_event) continue;
    if (r.f_hz[i] < m.nadir_hz) {
      m.nadir_hz = r.f_hz[i];
      m.t_nadir = r.t[i];
    }
  }

  double sum = 0.0;
  const std::size_t n = r.t.size();
  for (std::size_t i = n - w_tail - 1; i < n; ++i) sum += r.f_hz[i];
  m.settling_hz = sum / static_cast<double>(w_tail + 1);

  m.ufls_crossed = r.ufls_crossed || m.nadir_hz < r.meta.ufls_hz;
  const double dev_hz = std::abs(r.meta.f_n - m.settling_hz);
  m.fr_measure = dev_hz > 0.0 ? std::abs(r.meta.event_mw) / (dev_hz / 0.1) : std::numeric_limits<double>::quiet_NaN();
  return m;
}

inline Metrics compute_metrics(const SimResult& r, const MetricsOptions& opt = {}) {
  return compute_metrics(r, r.meta.t_event, opt.tail_window, opt.rocof_window);
}

// ---------------------------------------------------------------------------
// Virtual inertia characterization

/// Frequency deviation (pu) with a step in ROCOF: flat until t_start, then a
/// linear decline at `rocof` Hz/s for `duration` seconds, then held.
struct RocofStep {
  double rocof = 0.0;
  double t_start = 0.0;
  double duration = 1.0;
  double f_n = 60.0;

  double operator()(double t) const {
    const double tau = std::clamp(t - t_start, 0.0, duration);
    return -rocof * tau / f_n;
  }
};

inline RocofStep step_rocof_input(double rocof, double t_start, double duration, double f_n) {
  detail::require(duration > 0.0, "duration", "must be > 0");
  detail::require(f_n > 0.0, "f_n", "must be > 0");
  return {rocof, t_start, duration, f_n};
}

/// Instantaneous virtual inertia H(t) = f_n / (2 rocof) * p(t), with p in pu
/// of the inverter capacity and rocof the magnitude of the frequency decline.
inline std::vector<double> h_inv_instant(std::span<const double> p_inertia, double rocof, double f_n) {
  detail::require(rocof != 0.0, "rocof", "must be non-zero");
  std::vector<double> h(p_inertia.size());
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = f_n / (2.0 * rocof) * p_inertia[i];
  return h;
}

/// Steady-state virtual inertia of the washout-based controller.
inline double steady_state_inertia(double k_i, double t_wowi) {
  detail::require(k_i >= 0.0 && t_wowi >= 0.0, "k_i/t_wowi", "must be >= 0");
  return k_i * t_wowi / 2.0;
}

/// Closed-form 10-90% rise time approximation for the low-pass + washout
/// cascade. Exact only when one time constant dominates.
inline double inertia_rise_time(double t_lpwi, double t_wowi) {
  detail::require(t_lpwi > 0.0 && t_wowi > 0.0, "t_lpwi/t_wowi", "must be > 0");
  return std::log(9.0) * std::hypot(t_lpwi, t_wowi);
}

/// Largest sustained ROCOF (Hz/s) the headroom can answer at inertia h_ss.
inline double max_rocof(double p_headroom, double h_ss, double f_n) {
  detail::require(h_ss > 0.0, "h_ss", "must be > 0");
  return p_headroom / (2.0 * h_ss) * f_n;
}

/// Same limit written in controller gains.
inline double max_rocof_from_gains(double p_headroom, double k_i, double t_wowi, double f_n) {
  detail::require(k_i * t_wowi > 0.0, "k_i*t_wowi", "must be > 0");
  return p_headroom / (k_i * t_wowi) * f_n;
}

struct InertiaCharacterization {
  double rocof = 0.0;
  std::vector<double> t;
  std::vector<double> p;        // inertia power, pu on c_inv
  std::vector<double> h_inv_t;  // s
  double h_ss = 0.0;            // closed form
  double h_ss_measured = 0.0;
  double p_ss_measured = 0.0;
  double t_rise = 0.0;          // closed form
  double t_rise_measured = std::numeric_limits<double>::quiet_NaN();
  double rocof_max = 0.0;       // for the given headroom
  bool clipped = false;
};

struct CharacterizeOptions {
  double dt = 0.001;
  double t_start = 1.0;
  double duration = 0.0;  // 0 = max(10, 20 * (T_lpwi + T_wowi))
  double f_n = 60.0;
};

namespace detail {

/// Time at which `y` first reaches `level`, linearly interpolated.
inline double first_crossing(std::span<const double> t, std::span<const double> y, double level) {
  for (std::size_t i = 1; i < y.size(); ++i) {
    if ((y[i - 1] < level) != (y[i] < level)) {
      const double a = (level - y[i - 1]) / (y[i] - y[i - 1]);
      return t[i - 1] + a * (t[i] - t[i - 1]);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

/// Drives the inertia controller open-loop with a ROCOF step and measures the
/// steady inertia and 10-90% rise time. `p_headroom` only enters rocof_max.
inline InertiaCharacterization characterize_inertia(const InertiaCtrlParams& params, double rocof, double p_headroom,
                                                    const CharacterizeOptions& opt = {}) {
  validate(params, "inertia");
  detail::require(rocof > 0.0, "rocof", "must be > 0");
  const double duration =
      opt.duration > 0.0 ? opt.duration : std::max(10.0, 20.0 * (params.T_lpwi + params.T_wowi));
  const auto input = step_rocof_input(rocof, opt.t_start, duration, opt.f_n);

  InertiaCharacterization out;
  out.rocof = rocof;
  out.h_ss = steady_state_inertia(params.K_i, params.T_wowi);
  out.t_rise = inertia_rise_time(params.T_lpwi, params.T_wowi);
  out.rocof_max = out.h_ss > 0.0 ? max_rocof(p_headroom, out.h_ss, opt.f_n) : std::numeric_limits<double>::infinity();

  auto deriv = [&](double t, const std::vector<double>& x, std::vector<double>& dx) {
    InertiaState s{{x[0]}, {x[1]}};
    const auto r = inertia_ctrl_eval(s, input(t), params);
    dx[0] = r.d.lowpass.x;
    dx[1] = r.d.washout.x;
  };
  std::vector<double> x(2, 0.0);
  Rk4Stepper stepper;
  const auto n = static_cast<std::int64_t>(std::llround((opt.t_start + duration) / opt.dt));
  for (std::int64_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * opt.dt;
    InertiaState s{{x[0]}, {x[1]}};
    const double p = inertia_ctrl_eval(s, input(t), params).p_cmd;
    out.t.push_back(t);
    out.p.push_back(p);
    out.clipped = out.clipped || (params.p_limit > 0.0 && p >= params.p_limit * (1.0 - 1e-12));
    if (k < n) stepper.step(x, t, opt.dt, deriv);
  }

  out.h_inv_t = h_inv_instant(out.p, rocof, opt.f_n);
  out.p_ss_measured = out.p.back();
  out.h_ss_measured = out.h_inv_t.back();
  if (out.p_ss_measured > 0.0) {
    const double t10 = detail::first_crossing(out.t, out.p, 0.1 * out.p_ss_measured);
    const double t90 = detail::first_crossing(out.t, out.p, 0.9 * out.p_ss_measured);
    out.t_rise_measured = t90 - t10;
  }
  return out;
}

/// Smallest ROCOF at which the inertia output reaches its limit, found by
/// bisection on the simulated response.
inline double find_clipping_rocof(const InertiaCtrlParams& params, const CharacterizeOptions& opt = {},
                                  double rel_tol = 1e-6) {
  detail::require(params.K_i * params.T_wowi > 0.0 && params.p_limit > 0.0, "inertia", "needs K_i, T_wowi, p_limit > 0");
  auto clips = [&](double r) { return characterize_inertia(params, r, params.p_limit, opt).clipped; };
  double lo = 0.0;
  double hi = 1.0;
  while (!clips(hi)) hi *= 2.0;
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (clips(mid) ? hi : lo) = mid;
  }
  return hi;
}

// ---------------------------------------------------------------------------
// Step-response compliance

/// Acceptance bands for a frequency-step response. Defaults follow common
/// inverter-based resource performance guidance; all are inputs.
struct StepBands {
  double reaction_threshold = 0.02;  // fraction of final response
  double max_reaction_s = 2.0;
  double max_rise_s = 4.0;
  double max_settling_s = 10.0;
  double max_overshoot_pct = 5.0;
  double settling_band_pct = 2.5;
};

struct ComplianceItem {
  std::string metric;
  double value = std::numeric_limits<double>::quiet_NaN();
  double limit = 0.0;
  bool pass = false;
  std::string reason;
};

struct ComplianceReport {
  double final_dp = 0.0;  // pu on c_inv
  std::vector<ComplianceItem> items;  // reaction_time, rise_time, settling_time, overshoot, settling_band

  bool pass() const {
    return std::all_of(items.begin(), items.end(), [](const ComplianceItem& i) { return i.pass; });
  }
  const ComplianceItem& at(const std::string& name) const {
    for (const auto& i : items)
      if (i.metric == name) return i;
    throw std::out_of_range("no compliance metric " + name);
  }
};

/// Evaluates plant 0 of `r` after a frequency step at `t_step`. The final
/// response is the last recorded sample; a response that never enters the
/// settling band is reported as a failure, not an error.
inline ComplianceReport nerc_step_compliance(const SimResult& r, double step_pu, double t_step,
                                             const StepBands& bands = {}) {
  detail::require(!r.p_plant.empty() && !r.p_plant[0].empty(), "result", "no plant series");
  detail::require(step_pu != 0.0, "step_pu", "must be non-zero");
  ComplianceReport rep;
  const auto& p = r.p_plant[0];
  const double base = r.p_base[0];
  std::vector<double> t, dp;
  for (std::size_t i = 0; i < r.t.size(); ++i) {
    if (r.t[i] < t_step) continue;
    t.push_back(r.t[i] - t_step);
    dp.push_back(p[i] - base);
  }
  detail::require(!t.empty(), "t_step", "after the end of the result");
  rep.final_dp = dp.back();
  const double fin = rep.final_dp;
  const double mag = std::abs(fin);

  auto add = [&](std::string name, double value, double limit, std::string fail_reason) {
    ComplianceItem item{std::move(name), value, limit, std::isfinite(value) && value <= limit, {}};
    if (!item.pass) item.reason = std::isfinite(value) ? "exceeds limit" : std::move(fail_reason);
    rep.items.push_back(std::move(item));
  };

  if (mag == 0.0) {
    for (const char* m : {"reaction_time", "rise_time", "settling_time", "overshoot", "settling_band"})
      rep.items.push_back({m, std::numeric_limits<double>::quiet_NaN(), 0.0, false, "no response"});
    return rep;
  }

  // Work with the response normalized so the final value is +1.
  std::vector<double> y(dp.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = dp[i] / fin;

  double reaction = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < y.size(); ++i)
    if (std::abs(y[i]) > bands.reaction_threshold) {
      reaction = t[i];
      break;
    }
  add("reaction_time", reaction, bands.max_reaction_s, "never reacted");

  auto crossing = [&](double level) {
    if (y.front() >= level) return t.front();
    return detail::first_crossing(t, y, level);
  };
  add("rise_time", crossing(0.9) - crossing(0.1), bands.max_rise_s, "never reached 90%");

  const double band = bands.settling_band_pct / 100.0;
  double settle = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (std::abs(y[i] - 1.0) > band) settle = (i + 1 < t.size()) ? t[i + 1] : std::numeric_limits<double>::quiet_NaN();
  add("settling_time", settle, bands.max_settling_s, "never settled into band");

  const double peak = *std::max_element(y.begin(), y.end());
  add("overshoot", std::max(0.0, peak - 1.0) * 100.0, bands.max_overshoot_pct, "");

  // Worst deviation from final over the last 10% of the record.
  const std::size_t tail_from = y.size() - std::max<std::size_t>(1, y.size() / 10);
  double worst = 0.0;
  for (std::size_t i = tail_from; i < y.size(); ++i) worst = std::max(worst, std::abs(y[i] - 1.0));
  add("settling_band", worst * 100.0, bands.settling_band_pct, "");
  return rep;
}

// ---------------------------------------------------------------------------
// Multi-farm conflict

struct ConflictIndex {
  double mean_std = 0.0;       // time-averaged cross-farm standard deviation, pu
  double max_divergence = 0.0; // largest max-min spread at any sample, pu
};

inline ConflictIndex conflict_index(const std::vector<std::vector<double>>& farms, std::size_t from = 0) {
  detail::require(farms.size() >= 2, "farms", "need at least two farms");
  const std::size_t n = farms.front().size();
  for (const auto& f : farms) detail::require(f.size() == n, "farms", "mismatched series lengths");
  detail::require(from < n, "from", "window start beyond series");

  ConflictIndex ci;
  const double m = static_cast<double>(farms.size());
  for (std::size_t k = from; k < n; ++k) {
    double mean = 0.0, lo = farms[0][k], hi = farms[0][k];
    for (const auto& f : farms) {
      mean += f[k];
      lo = std::min(lo, f[k]);
      hi = std::max(hi, f[k]);
    }
    mean /= m;
    double var = 0.0;
    for (const auto& f : farms) var += (f[k] - mean) * (f[k] - mean);
    ci.mean_std += std::sqrt(var / m);
    ci.max_divergence = std::max(ci.max_divergence, hi - lo);
  }
  ci.mean_std /= static_cast<double>(n - from);
  return ci;
}

/// Conflict index over the samples of `r` with t >= t_from.
inline ConflictIndex conflict_index(const SimResult& r, double t_from) {
  const auto it = std::lower_bound(r.t.begin(), r.t.end(), t_from);
  return conflict_index(r.p_plant, static_cast<std::size_t>(it - r.t.begin()));
}

}  // namespace pvfreq
