#pragma once

// Fixed-step simulation of the composed grid + PV plant system.
//
// State layout (flat vector advanced by RK4):
//   per area   : df, governor valve, governor reheat
//   two-area   : tie-line flow deviation (area A export, pu on area A base)
//   per plant  : PlantState::size controller states
//
// Everything that is discontinuous in time (events, measurement noise, AGC
// dispatch samples) changes only on step boundaries and is held across the
// four RK4 stages.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "pvfreq/grid.hpp"
#include "pvfreq/pv_control.hpp"
#include "pvfreq/rk4.hpp"
#include "pvfreq/scenario.hpp"

namespace pvfreq {

/// Per-plant Gaussian measurement noise. Streams are keyed by
/// (seed, plant index) and drawn once per step.
class NoiseStream {
public:
  NoiseStream(std::uint64_t seed, std::size_t plant_index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(plant_index), 0x5eedu};
    engine_.seed(seq);
  }

  double standard_normal() { return dist_(engine_); }

private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

/// Measured deviation = true deviation + constant bias + N(0, sigma^2).
/// Draws nothing when sigma is zero.
inline double inject_noise(double df_true, const PvPlant& plant, NoiseStream& rng) {
  double df = df_true + plant.meas_bias;
  if (plant.meas_noise_sigma > 0.0) df += plant.meas_noise_sigma * rng.standard_normal();
  return df;
}

struct SimMeta {
  double dt = 0.0;
  double f_n = 60.0;
  double ufls_hz = 59.3;
  double t_event = 0.0;          // first event after snapping to the step grid
  double event_mw = 0.0;         // total area-A imbalance in MW (signed)
  double max_event_snap_s = 0.0; // largest |snapped - requested| event time
};

struct SimResult {
  std::vector<double> t;
  std::vector<double> f_hz;
  std::vector<double> p_gov;  // pu on C_system (area A)
  std::vector<double> p_agc;  // pu on C_system (area A)
  std::vector<double> p_event;  // pu on C_system (area A)
  std::vector<double> dfdt;     // d(df)/dt of area A, pu/s
  std::vector<std::string> plant_ids;
  std::vector<double> p_base;                 // per plant, pu on c_inv
  std::vector<std::vector<double>> p_plant;   // total plant output, pu on c_inv
  // Two-area runs only.
  std::vector<double> f_b_hz;
  std::vector<double> dp_tie;
  bool ufls_crossed = false;
  SimMeta meta;

  std::size_t size() const { return t.size(); }
};

namespace detail {

class System {
public:
  explicit System(const Scenario& s)
      : sc_(s),
        n_areas_(s.two_area ? 2 : 1),
        tie_offset_(3 * n_areas_),
        plant_offset_(tie_offset_ + (s.two_area ? 1 : 0)),
        held_agc_(s.plants.size()),
        df_meas_offset_(s.plants.size(), 0.0),
        p_event_(n_areas_, 0.0) {}

  std::size_t state_size() const { return plant_offset_ + PlantState::size * sc_.plants.size(); }

  const GridParams& area_grid(int a) const { return a == 0 ? sc_.grid : sc_.two_area->grid_b; }

  std::string state_name(std::size_t i) const {
    if (i < tie_offset_) {
      static const char* n[] = {"df", "gov.valve", "gov.reheat"};
      return "area" + std::to_string(i / 3) + "." + n[i % 3];
    }
    if (i < plant_offset_) return "tie.dp";
    const std::size_t k = i - plant_offset_;
    return "plant[" + sc_.plants[k / PlantState::size].id + "]." + PlantState::names[k % PlantState::size];
  }

  struct Outputs {
    std::vector<double> p_inc;
    double p_gov_a = 0.0;
    double p_agc_a = 0.0;
  };

  void eval(double t, const std::vector<double>& x, std::vector<double>& dx, Outputs* out) const {
    std::vector<double> p_pv(n_areas_, 0.0);
    const double dp_tie = sc_.two_area ? x[tie_offset_] : 0.0;
    if (out) out->p_inc.assign(sc_.plants.size(), 0.0);

    for (std::size_t i = 0; i < sc_.plants.size(); ++i) {
      const auto& plant = sc_.plants[i];
      const std::size_t off = plant_offset_ + PlantState::size * i;
      PlantState ps = PlantState::unpack(std::span<const double>(x).subspan(off, PlantState::size));
      ps.agc.held_ace = held_agc_[i].held_ace;
      const double df_meas = x[3 * plant.area] + df_meas_offset_[i];
      const double tie_seen = plant.area == 0 ? dp_tie : -dp_tie * sc_.grid.C_system / area_grid(1).C_system;
      const auto r = plant_eval(ps, plant, df_meas, tie_seen, sc_.agc ? &*sc_.agc : nullptr, t);
      r.d.pack(std::span<double>(dx).subspan(off, PlantState::size));
      const double c_sys = area_grid(plant.area).C_system;
      p_pv[plant.area] += to_system_base(r.p_inc, plant.c_inv, c_sys);
      if (out) {
        out->p_inc[i] = r.p_inc;
        if (plant.area == 0) out->p_agc_a += to_system_base(r.p_agc, plant.c_inv, c_sys);
      }
    }

    for (int a = 0; a < n_areas_; ++a) {
      const GridParams& g = area_grid(a);
      const std::size_t o = 3 * a;
      GovernorState gs{{x[o + 1]}, {x[o + 2]}};
      const auto gov = governor_derivatives(gs, x[o], g.gov, g.f_N);
      const double p_mech = synchronous_fraction(g) * gov.p_mech;
      double p_tie = 0.0;
      if (sc_.two_area) p_tie = a == 0 ? -dp_tie : dp_tie * sc_.grid.C_system / area_grid(1).C_system;
      dx[o] = swing_derivative(x[o], p_mech, p_pv[a], p_event_[a] + p_tie, g);
      dx[o + 1] = gov.d_valve;
      dx[o + 2] = gov.d_reheat;
      if (out && a == 0) out->p_gov_a = p_mech;
    }
    if (sc_.two_area) dx[tie_offset_] = tie_line_derivative(dp_tie, x[0], x[3], sc_.two_area->tie);
  }

  const Scenario& sc_;
  int n_areas_;
  std::size_t tie_offset_;
  std::size_t plant_offset_;

  // Per-step held inputs.
  std::vector<AgcState> held_agc_;
  std::vector<double> df_meas_offset_;
  std::vector<double> p_event_;
};

}  // namespace detail

/// Runs `scenario` with step/horizon/seed taken from `cfg`. Bit-deterministic
/// for identical inputs. Throws NumericalError on a non-finite state.
inline SimResult run_scenario(const Scenario& scenario, const SimConfig& cfg) {
  Scenario sc = scenario;
  sc.sim = cfg;
  validate(sc);

  detail::System sys(sc);
  const double dt = cfg.dt;
  const auto n_steps = static_cast<std::int64_t>(std::llround(cfg.t_end / dt));

  SimResult res;
  res.meta.dt = dt;
  res.meta.f_n = sc.grid.f_N;
  res.meta.ufls_hz = sc.grid.ufls_hz;

  struct SnappedEvent {
    std::int64_t step;
    int area;
    double delta_p;
  };
  std::vector<SnappedEvent> events;
  double first_event = -1.0;
  for (const auto& e : sc.events) {
    const auto k = static_cast<std::int64_t>(std::llround(e.t_event / dt));
    res.meta.max_event_snap_s = std::max(res.meta.max_event_snap_s, std::abs(static_cast<double>(k) * dt - e.t_event));
    events.push_back({k, e.area, e.delta_p});
    if (first_event < 0.0 || k * dt < first_event) first_event = static_cast<double>(k) * dt;
    if (e.area == 0) res.meta.event_mw += e.delta_p * sc.grid.C_system;
  }
  res.meta.t_event = std::max(first_event, 0.0);

  for (const auto& p : sc.plants) {
    res.plant_ids.push_back(p.id);
    res.p_base.push_back(p.p_base);
  }
  res.p_plant.resize(sc.plants.size());

  std::vector<NoiseStream> noise;
  for (std::size_t i = 0; i < sc.plants.size(); ++i) noise.emplace_back(cfg.rng_seed, i);

  std::vector<double> x(sys.state_size(), 0.0);
  std::vector<double> dx(x.size(), 0.0);
  detail::System::Outputs outs;
  Rk4Stepper stepper;
  auto deriv = [&](double t, const std::vector<double>& s, std::vector<double>& d) { sys.eval(t, s, d, nullptr); };

  const double ufls_a = sc.grid.ufls_hz;
  const double ufls_b = sc.two_area ? sc.two_area->grid_b.ufls_hz : 0.0;

  for (std::int64_t k = 0; k <= n_steps; ++k) {
    const double t = static_cast<double>(k) * dt;

    std::fill(sys.p_event_.begin(), sys.p_event_.end(), 0.0);
    for (const auto& e : events)
      if (k >= e.step) sys.p_event_[e.area] += e.delta_p;

    const double dp_tie = sc.two_area ? x[sys.tie_offset_] : 0.0;
    for (std::size_t i = 0; i < sc.plants.size(); ++i) {
      const auto& plant = sc.plants[i];
      const double df_true = x[3 * plant.area];
      sys.df_meas_offset_[i] = inject_noise(df_true, plant, noise[i]) - df_true;
      if (sc.agc && plant.controllers.agc) {
        const double tie_seen = plant.area == 0 ? dp_tie : -dp_tie * sc.grid.C_system / sys.area_grid(1).C_system;
        agc_sample(sys.held_agc_[i], df_true + sys.df_meas_offset_[i], tie_seen, *sc.agc, t, dt);
      }
    }

    if (k % cfg.record_every == 0) {
      sys.eval(t, x, dx, &outs);
      res.t.push_back(t);
      const double f_a = sc.grid.f_N * (1.0 + x[0]);
      res.f_hz.push_back(f_a);
      res.p_gov.push_back(outs.p_gov_a);
      res.p_agc.push_back(outs.p_agc_a);
      res.p_event.push_back(sys.p_event_[0]);
      res.dfdt.push_back(dx[0]);
      res.ufls_crossed = res.ufls_crossed || f_a < ufls_a;
      for (std::size_t i = 0; i < sc.plants.size(); ++i) {
        const auto& plant = sc.plants[i];
        const double total = plant.p_base + outs.p_inc[i];
        if (total < -1e-12 || total > plant.p_base + plant.p_headroom + 1e-12)
          throw std::logic_error("plant '" + plant.id + "' output left its headroom bounds at t=" + std::to_string(t));
        res.p_plant[i].push_back(total);
      }
      if (sc.two_area) {
        const double f_b = sc.two_area->grid_b.f_N * (1.0 + x[3]);
        res.f_b_hz.push_back(f_b);
        res.dp_tie.push_back(x[sys.tie_offset_]);
        res.ufls_crossed = res.ufls_crossed || f_b < ufls_b;
      }
    }
    if (k == n_steps) break;

    stepper.step(x, t, dt, deriv);
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!std::isfinite(x[i])) throw NumericalError(sys.state_name(i), t + dt);
  }
  return res;
}

inline SimResult run_scenario(const Scenario& scenario) { return run_scenario(scenario, scenario.sim); }

/// Drives one plant's controllers open-loop with a prescribed frequency
/// deviation `df_of_t` (pu). Used by characterization and step-response
/// harnesses. The prescribed signal is evaluated at every RK4 stage.
inline SimResult run_prescribed_frequency(const PvPlant& plant, const std::function<double(double)>& df_of_t,
                                          const SimConfig& cfg, double f_n = 60.0,
                                          const std::optional<AgcParams>& agc = std::nullopt) {
  validate(plant, "plant");
  validate(cfg);
  const AgcParams* agc_ptr = agc ? &*agc : nullptr;
  const double dt = cfg.dt;
  const auto n_steps = static_cast<std::int64_t>(std::llround(cfg.t_end / dt));

  SimResult res;
  res.meta.dt = dt;
  res.meta.f_n = f_n;
  res.plant_ids = {plant.id};
  res.p_base = {plant.p_base};
  res.p_plant.resize(1);

  NoiseStream noise(cfg.rng_seed, 0);
  AgcState held;
  double meas_offset = 0.0;
  std::vector<double> x(PlantState::size, 0.0);
  Rk4Stepper stepper;
  auto deriv = [&](double t, const std::vector<double>& s, std::vector<double>& d) {
    PlantState ps = PlantState::unpack(s);
    ps.agc.held_ace = held.held_ace;
    plant_eval(ps, plant, df_of_t(t) + meas_offset, 0.0, agc_ptr, t).d.pack(d);
  };

  for (std::int64_t k = 0; k <= n_steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double df_true = df_of_t(t);
    meas_offset = inject_noise(df_true, plant, noise) - df_true;
    if (agc_ptr) agc_sample(held, df_true + meas_offset, 0.0, *agc_ptr, t, dt);
    if (k % cfg.record_every == 0) {
      PlantState ps = PlantState::unpack(x);
      ps.agc.held_ace = held.held_ace;
      const auto r = plant_eval(ps, plant, df_true + meas_offset, 0.0, agc_ptr, t);
      res.t.push_back(t);
      res.f_hz.push_back(f_n * (1.0 + df_true));
      res.p_gov.push_back(0.0);
      res.p_agc.push_back(r.p_agc);
      res.p_event.push_back(0.0);
      res.dfdt.push_back(0.0);
      res.p_plant[0].push_back(plant.p_base + r.p_inc);
    }
    if (k == n_steps) break;
    stepper.step(x, t, dt, deriv);
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!std::isfinite(x[i])) throw NumericalError(std::string("plant.") + PlantState::names[i], t + dt);
  }
  return res;
}

}  // namespace pvfreq
