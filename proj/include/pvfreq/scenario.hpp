#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pvfreq/grid.hpp"
#include "pvfreq/pv_control.hpp"

namespace pvfreq {

struct SimConfig {
  double dt = 0.01;
  double t_end = 60.0;
  int record_every = 1;
  std::uint64_t rng_seed = 1;
};

/// Second area joined to `Scenario::grid` by a tie line. Plants and events
/// with `area == 1` belong to it.
struct TwoArea {
  GridParams grid_b;
  TieLine tie;
};

struct Scenario {
  std::string id;
  std::string description;
  GridParams grid;
  std::optional<TwoArea> two_area;
  std::vector<PvPlant> plants;
  std::vector<ContingencyEvent> events;
  std::optional<AgcParams> agc;
  SimConfig sim;
};

inline void validate(const SimConfig& c, const std::string& at = "sim") {
  detail::require(std::isfinite(c.dt) && c.dt > 0.0, at + ".dt", "must be > 0");
  detail::require(std::isfinite(c.t_end) && c.t_end > c.dt, at + ".t_end", "must exceed dt");
  detail::require(c.record_every >= 1, at + ".record_every", "must be >= 1");
}

/// Checks every invariant and returns non-fatal warnings.
inline std::vector<std::string> validate(const Scenario& s) {
  std::vector<std::string> warnings;
  validate(s.grid, "grid");
  const int n_areas = s.two_area ? 2 : 1;
  if (s.two_area) {
    validate(s.two_area->grid_b, "two_area.grid_b");
    validate(s.two_area->tie, "two_area.tie");
  }
  std::set<std::string> ids;
  bool any_agc = false;
  for (std::size_t i = 0; i < s.plants.size(); ++i) {
    const auto& p = s.plants[i];
    const std::string at = "plants[" + std::to_string(i) + "]";
    detail::require(!p.id.empty(), at + ".id", "must not be empty");
    detail::require(ids.insert(p.id).second, at + ".id", "duplicate plant id '" + p.id + "'");
    detail::require(p.area >= 0 && p.area < n_areas, at + ".area", "no such area");
    validate(p, at);
    any_agc = any_agc || p.controllers.agc;
  }
  if (s.agc) validate(*s.agc, "agc");
  detail::require(!any_agc || s.agc.has_value(), "agc", "plants participate in AGC but no agc block is given");
  for (std::size_t i = 0; i < s.events.size(); ++i) {
    const std::string at = "events[" + std::to_string(i) + "]";
    validate(s.events[i], at);
    detail::require(s.events[i].area >= 0 && s.events[i].area < n_areas, at + ".area", "no such area");
  }
  validate(s.sim, "sim");

  for (int a = 0; a < n_areas; ++a) {
    const GridParams& g = a == 0 ? s.grid : s.two_area->grid_b;
    double pv_mva = 0.0;
    for (const auto& p : s.plants)
      if (p.area == a) pv_mva += p.c_inv;
    const double expected = g.penetration * g.C_system;
    if (!s.plants.empty() && std::abs(pv_mva - expected) > 0.5 * expected + 1e-9) {
      warnings.push_back("area " + std::to_string(a) + ": installed PV " + std::to_string(pv_mva) +
                         " MVA is far from penetration * C_system = " + std::to_string(expected) + " MVA");
    }
  }
  return warnings;
}

}  // namespace pvfreq
