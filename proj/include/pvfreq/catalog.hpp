#pragma once

// Built-in scenarios. Acceptance tests and the CLI refer to these by id.
//
// Reference system: 68,750 MVA at 40% renewable penetration, no load damping,
// a 2,750 MW (0.04 pu) generation trip at t = 1 s. One aggregated PV plant of
// 27,500 MVA running at 0.7 pu with 0.1 pu headroom. The multi-farm cases
// split that capacity over five farms with measurement noise (sigma 2e-5 pu)
// and a spread of constant measurement biases (+-1e-4 pu).

#include <string>
#include <variant>
#include <vector>

#include "pvfreq/scenario.hpp"
#include "pvfreq/scenario_io.hpp"

namespace pvfreq {

struct CatalogEntry {
  std::string id;
  std::string description;
  std::variant<Scenario, SweepSpec> item;

  bool is_sweep() const { return std::holds_alternative<SweepSpec>(item); }
};

namespace catalog {

/// Start of the post-settling window used for the multi-farm conflict index.
inline constexpr double kMultifarmSettledFrom = 60.0;

inline GridParams reference_grid() {
  GridParams g;
  g.penetration = 0.4;
  g.D = 0.0;
  return g;
}

inline InertiaCtrlParams reference_inertia() {
  InertiaCtrlParams p;
  p.db_pu = 0.0;
  p.K_i = 500.0;
  p.T_lpwi = 1.0;
  p.T_wowi = 0.1;
  p.p_limit = 0.1;
  return p;
}

inline DroopCtrlParams reference_droop() {
  DroopCtrlParams p;
  p.db_pu = 0.0006;
  p.K_g = 15.0;
  p.T_lpwg = 1.0;
  p.T_wowg1 = 1.0;
  p.T_wowg2 = 1.0;
  p.p_limit = 0.1;
  return p;
}

inline FastPfcParams fast_pfc(double db_int_pu) {
  FastPfcParams p;
  p.droop = reference_droop();
  p.ki_fast = 10.0;
  p.db_int_pu = db_int_pu;
  p.p_limit = 0.1;
  return p;
}

inline PvPlant reference_plant(PlantControllers c) {
  PvPlant p;
  p.id = "pv";
  p.c_inv = 27500.0;
  p.p_base = 0.7;
  p.p_headroom = 0.1;
  p.controllers = std::move(c);
  return p;
}

inline Scenario reference(std::string id, std::string description, PlantControllers c) {
  Scenario s;
  s.id = std::move(id);
  s.description = std::move(description);
  s.grid = reference_grid();
  s.plants = {reference_plant(std::move(c))};
  s.events = {{1.0, -0.04, 0}};
  s.sim = {0.01, 60.0, 1, 1};
  return s;
}

inline Scenario multifarm(std::string id, double db_int_pu) {
  Scenario s;
  s.id = std::move(id);
  s.description = db_int_pu > 0.0 ? "Five fast-PFC farms with noisy, biased measurements; integral deadband on"
                                  : "Five fast-PFC farms with noisy, biased measurements; integral deadband off";
  s.grid = reference_grid();
  const double biases[] = {-1e-4, -5e-5, 0.0, 5e-5, 1e-4};
  for (int i = 0; i < 5; ++i) {
    PvPlant p;
    p.id = "farm" + std::to_string(i + 1);
    p.c_inv = 5500.0;
    p.p_base = 0.6;
    p.p_headroom = 0.2;
    p.controllers.fast_pfc = fast_pfc(db_int_pu);
    p.controllers.fast_pfc->p_limit = 0.2;
    p.meas_noise_sigma = 2e-5;
    p.meas_bias = biases[i];
    s.plants.push_back(p);
  }
  s.events = {{1.0, -0.04, 0}};
  s.sim = {0.01, 300.0, 1, 7};
  return s;
}

inline Scenario agc(std::string id, bool enabled) {
  PlantControllers c;
  c.droop = reference_droop();
  c.agc = enabled;
  Scenario s = reference(std::move(id),
                         enabled ? "Reference trip with PV droop and PV AGC enabled at t = 20 s"
                                 : "Reference trip with PV droop only (AGC comparison baseline)",
                         c);
  s.plants[0].p_base = 0.6;
  s.plants[0].p_headroom = 0.2;
  if (enabled) s.agc = AgcParams{20.0, 0.5, 0.05, 20.0, 0.0};
  s.sim.t_end = 300.0;
  return s;
}

inline Scenario two_area_agc() {
  PlantControllers c;
  c.droop = reference_droop();
  c.agc = true;
  Scenario s = reference("two-area-agc", "Two identical areas, trip in area A, PV AGC in both areas", c);
  s.plants[0].id = "pv_a";
  s.plants[0].p_base = 0.6;
  s.plants[0].p_headroom = 0.2;
  PvPlant b = s.plants[0];
  b.id = "pv_b";
  b.area = 1;
  s.plants.push_back(b);
  s.two_area = TwoArea{reference_grid(), TieLine{2.0, 0.0}};
  s.agc = AgcParams{20.0, 0.5, 0.05, 20.0, 0.0};
  s.sim.t_end = 300.0;
  return s;
}

inline Scenario rocof_closure() {
  Scenario s;
  s.id = "rcc-closure";
  s.description = "0.04 pu trip, H = 5 s, no damping, no governor, no PV: constant RoCoF";
  s.grid.penetration = 0.0;
  s.grid.D = 0.0;
  s.grid.gov.enabled = false;
  s.events = {{1.0, -0.04, 0}};
  s.sim = {0.01, 10.0, 1, 1};
  return s;
}

inline SweepSpec rcc_sweep() {
  SweepSpec sw;
  sw.id = "rcc-sweep";
  sw.base = reference("rcc-sweep-base", "Reference trip without PV control", {});
  sw.axis = "grid.penetration";
  sw.values = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  return sw;
}

}  // namespace catalog

inline std::vector<CatalogEntry> builtin_catalog() {
  using namespace catalog;
  std::vector<CatalogEntry> out;
  auto add = [&](Scenario s) {
    const std::string id = s.id;
    const std::string d = s.description;
    out.push_back({id, d, std::move(s)});
  };
  PlantControllers inertia, droop, both;
  inertia.inertia = reference_inertia();
  droop.droop = reference_droop();
  both.inertia = reference_inertia();
  both.droop = reference_droop();
  PlantControllers fast;
  fast.fast_pfc = fast_pfc(0.0006);

  add(reference("table1-1", "PV inertia control", inertia));
  add(reference("table1-2", "PV governor (droop) control", droop));
  add(reference("table1-3", "PV inertia + PV governor control", both));
  add(reference("table1-4", "Without frequency control of PV", {}));
  add(reference("fast-pfc", "Fast primary frequency control (droop + deadbanded integral)", fast));
  add(multifarm("multifarm-db", 0.0006));
  add(multifarm("multifarm-nodb", 0.0));
  out.push_back({"rcc-sweep", "Reference trip without PV control, penetration 0-50%", rcc_sweep()});
  add(agc("agc", true));
  add(agc("no-agc", false));
  add(two_area_agc());
  add(rocof_closure());
  return out;
}

inline const CatalogEntry* find_catalog_entry(const std::vector<CatalogEntry>& cat, const std::string& id) {
  for (const auto& e : cat)
    if (e.id == id) return &e;
  return nullptr;
}

/// Looks up a scenario (not a sweep) by id. Throws ConfigError if absent.
inline Scenario catalog_scenario(const std::string& id) {
  const auto cat = builtin_catalog();
  const auto* e = find_catalog_entry(cat, id);
  if (!e || e->is_sweep()) throw ConfigError("no built-in scenario '" + id + "'", "id");
  return std::get<Scenario>(e->item);
}

}  // namespace pvfreq
