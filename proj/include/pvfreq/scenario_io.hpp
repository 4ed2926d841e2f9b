#pragma once

// Scenario JSON schema, result writers and sweep specifications.
//
// Every object is read through JsonReader, which knows the dotted path of the
// value it is reading. In strict mode unknown keys are errors; in lenient mode
// they are collected as warnings.

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pvfreq/analyze.hpp"
#include "pvfreq/errors.hpp"
#include "pvfreq/scenario.hpp"
#include "pvfreq/simulate.hpp"

namespace pvfreq {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct ParseOptions {
  bool strict = true;
};

namespace io {

class JsonReader {
public:
  JsonReader(const Json& j, std::string path, bool strict, std::vector<std::string>* warnings)
      : j_(j), path_(std::move(path)), strict_(strict), warnings_(warnings) {
    if (!j_.is_object()) throw ConfigError("expected an object", path_.empty() ? "<root>" : path_);
  }

  JsonReader(const JsonReader&) = delete;
  JsonReader& operator=(const JsonReader&) = delete;

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.push_back(key);
    if (!j_.contains(key)) return;
    const Json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError("expected a number", at(key));
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("expected a boolean", at(key));
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError("expected an integer", at(key));
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("expected a string", at(key));
      }
      out = v.get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(e.what(), at(key));
    }
  }

  template <class T>
  void require_key(const std::string& key, T& out) {
    if (!j_.contains(key)) throw ConfigError("missing required key", at(key));
    get(key, out);
  }

  /// Marks `key` as consumed and returns the raw value (nullptr if absent).
  const Json* child(const std::string& key) {
    seen_.push_back(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  bool strict() const { return strict_; }
  std::vector<std::string>* warnings() const { return warnings_; }

  void finish() {
    for (const auto& [k, v] : j_.items()) {
      if (std::find(seen_.begin(), seen_.end(), k) != seen_.end()) continue;
      if (strict_) throw ConfigError("unknown key", at(k));
      if (warnings_) warnings_->push_back("ignored unknown key " + at(k));
    }
  }

private:
  const Json& j_;
  std::string path_;
  bool strict_;
  std::vector<std::string>* warnings_;
  std::vector<std::string> seen_;
};

inline void read(JsonReader& r, GovernorParams& g) {
  r.get("enabled", g.enabled);
  r.get("R", g.R);
  r.get("T_g", g.T_g);
  r.get("T_rh", g.T_rh);
  r.get("F_h", g.F_h);
  r.get("deadband_hz", g.deadband_hz);
  r.get("p_max", g.p_max);
}

template <class T>
void read_child(JsonReader& parent, const std::string& key, T& out) {
  if (const Json* c = parent.child(key)) {
    JsonReader r(*c, parent.at(key), parent.strict(), parent.warnings());
    read(r, out);
    r.finish();
  }
}

template <class T>
void read_optional(JsonReader& parent, const std::string& key, std::optional<T>& out) {
  if (const Json* c = parent.child(key)) {
    if (c->is_null()) return;
    out.emplace();
    JsonReader r(*c, parent.at(key), parent.strict(), parent.warnings());
    read(r, *out);
    r.finish();
  }
}

inline void read(JsonReader& r, GridParams& g) {
  r.get("f_N", g.f_N);
  r.get("C_system", g.C_system);
  r.get("H_base", g.H_base);
  r.get("D", g.D);
  r.get("penetration", g.penetration);
  r.get("ufls_hz", g.ufls_hz);
  read_child(r, "gov", g.gov);
}

inline void read(JsonReader& r, TieLine& t) {
  r.get("T_tie", t.T_tie);
  r.get("scheduled_flow", t.scheduled_flow);
}

inline void read(JsonReader& r, TwoArea& t) {
  read_child(r, "grid_b", t.grid_b);
  read_child(r, "tie", t.tie);
}

inline void read(JsonReader& r, ContingencyEvent& e) {
  r.require_key("t_event", e.t_event);
  r.require_key("delta_p", e.delta_p);
  r.get("area", e.area);
}

inline void read(JsonReader& r, InertiaCtrlParams& p) {
  r.get("db_pu", p.db_pu);
  r.get("T_lpwi", p.T_lpwi);
  r.get("T_wowi", p.T_wowi);
  r.get("K_i", p.K_i);
  r.get("p_limit", p.p_limit);
  r.get("db_step", p.db_step);
}

inline void read(JsonReader& r, DroopCtrlParams& p) {
  r.get("db_pu", p.db_pu);
  r.get("T_lpwg", p.T_lpwg);
  r.get("K_g", p.K_g);
  r.get("p_limit", p.p_limit);
  r.get("lead_lag", p.lead_lag);
  r.get("T_wowg1", p.T_wowg1);
  r.get("T_wowg2", p.T_wowg2);
  r.get("db_step", p.db_step);
}

inline void read(JsonReader& r, FastPfcParams& p) {
  read_child(r, "droop", p.droop);
  r.get("ki_fast", p.ki_fast);
  r.get("db_int_pu", p.db_int_pu);
  r.get("p_limit", p.p_limit);
  r.get("bleed", p.bleed);
  r.get("bleed_T", p.bleed_T);
}

inline void read(JsonReader& r, AgcParams& p) {
  r.get("bias_b", p.bias_b);
  r.get("kp", p.kp);
  r.get("ki", p.ki);
  r.get("t_enable", p.t_enable);
  r.get("cycle_s", p.cycle_s);
}

inline void read(JsonReader& r, PlantControllers& c) {
  read_optional(r, "inertia", c.inertia);
  read_optional(r, "droop", c.droop);
  read_optional(r, "fast_pfc", c.fast_pfc);
  r.get("agc", c.agc);
}

inline void read(JsonReader& r, PvPlant& p) {
  r.require_key("id", p.id);
  r.get("area", p.area);
  r.get("c_inv", p.c_inv);
  r.get("p_base", p.p_base);
  r.get("p_headroom", p.p_headroom);
  read_child(r, "controllers", p.controllers);
  r.get("meas_noise_sigma", p.meas_noise_sigma);
  r.get("meas_bias", p.meas_bias);
}

inline void read(JsonReader& r, SimConfig& c) {
  r.get("dt", c.dt);
  r.get("t_end", c.t_end);
  r.get("record_every", c.record_every);
  r.get("rng_seed", c.rng_seed);
}

template <class T>
void read_array(JsonReader& parent, const std::string& key, std::vector<T>& out) {
  const Json* arr = parent.child(key);
  if (!arr) return;
  if (!arr->is_array()) throw ConfigError("expected an array", parent.at(key));
  out.clear();
  for (std::size_t i = 0; i < arr->size(); ++i) {
    T item{};
    JsonReader r((*arr)[i], parent.at(key) + "[" + std::to_string(i) + "]", parent.strict(), parent.warnings());
    read(r, item);
    r.finish();
    out.push_back(std::move(item));
  }
}

inline void read(JsonReader& r, Scenario& s) {
  int version = kSchemaVersion;
  r.get("schema_version", version);
  if (version != kSchemaVersion)
    throw ConfigError("unsupported schema version " + std::to_string(version), r.at("schema_version"));
  r.require_key("id", s.id);
  r.get("description", s.description);
  read_child(r, "grid", s.grid);
  read_optional(r, "two_area", s.two_area);
  read_array(r, "plants", s.plants);
  read_array(r, "events", s.events);
  read_optional(r, "agc", s.agc);
  read_child(r, "sim", s.sim);
}

// -- writers -----------------------------------------------------------------

inline Json to_json(const GovernorParams& g) {
  return {{"enabled", g.enabled}, {"R", g.R},         {"T_g", g.T_g},   {"T_rh", g.T_rh},
          {"F_h", g.F_h},         {"deadband_hz", g.deadband_hz}, {"p_max", g.p_max}};
}

inline Json to_json(const GridParams& g) {
  return {{"f_N", g.f_N},   {"C_system", g.C_system},       {"H_base", g.H_base},   {"D", g.D},
          {"penetration", g.penetration}, {"ufls_hz", g.ufls_hz}, {"gov", to_json(g.gov)}};
}

inline Json to_json(const InertiaCtrlParams& p) {
  return {{"db_pu", p.db_pu}, {"T_lpwi", p.T_lpwi},   {"T_wowi", p.T_wowi},
          {"K_i", p.K_i},     {"p_limit", p.p_limit}, {"db_step", p.db_step}};
}

inline Json to_json(const DroopCtrlParams& p) {
  return {{"db_pu", p.db_pu},       {"T_lpwg", p.T_lpwg},   {"K_g", p.K_g},         {"p_limit", p.p_limit},
          {"lead_lag", p.lead_lag}, {"T_wowg1", p.T_wowg1}, {"T_wowg2", p.T_wowg2}, {"db_step", p.db_step}};
}

inline Json to_json(const FastPfcParams& p) {
  return {{"droop", to_json(p.droop)}, {"ki_fast", p.ki_fast}, {"db_int_pu", p.db_int_pu},
          {"p_limit", p.p_limit},      {"bleed", p.bleed},     {"bleed_T", p.bleed_T}};
}

inline Json to_json(const AgcParams& p) {
  return {{"bias_b", p.bias_b}, {"kp", p.kp}, {"ki", p.ki}, {"t_enable", p.t_enable}, {"cycle_s", p.cycle_s}};
}

inline Json to_json(const PvPlant& p) {
  Json c = Json::object();
  if (p.controllers.inertia) c["inertia"] = to_json(*p.controllers.inertia);
  if (p.controllers.droop) c["droop"] = to_json(*p.controllers.droop);
  if (p.controllers.fast_pfc) c["fast_pfc"] = to_json(*p.controllers.fast_pfc);
  c["agc"] = p.controllers.agc;
  return {{"id", p.id},
          {"area", p.area},
          {"c_inv", p.c_inv},
          {"p_base", p.p_base},
          {"p_headroom", p.p_headroom},
          {"controllers", c},
          {"meas_noise_sigma", p.meas_noise_sigma},
          {"meas_bias", p.meas_bias}};
}

inline Json to_json(const Scenario& s) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["id"] = s.id;
  j["description"] = s.description;
  j["grid"] = to_json(s.grid);
  if (s.two_area)
    j["two_area"] = {{"grid_b", to_json(s.two_area->grid_b)},
                     {"tie", {{"T_tie", s.two_area->tie.T_tie}, {"scheduled_flow", s.two_area->tie.scheduled_flow}}}};
  j["plants"] = Json::array();
  for (const auto& p : s.plants) j["plants"].push_back(to_json(p));
  j["events"] = Json::array();
  for (const auto& e : s.events) j["events"].push_back({{"t_event", e.t_event}, {"delta_p", e.delta_p}, {"area", e.area}});
  if (s.agc) j["agc"] = to_json(*s.agc);
  j["sim"] = {{"dt", s.sim.dt}, {"t_end", s.sim.t_end}, {"record_every", s.sim.record_every}, {"rng_seed", s.sim.rng_seed}};
  return j;
}

inline Json parse_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what(), origin);
  }
}

}  // namespace io

/// Parses and fully validates a scenario document. Warnings (lenient unknown
/// keys, capacity/penetration mismatch) are appended to `warnings`.
inline Scenario parse_scenario(const Json& doc, const ParseOptions& opt = {}, std::vector<std::string>* warnings = nullptr) {
  Scenario s;
  {
    io::JsonReader r(doc, "", opt.strict, warnings);
    io::read(r, s);
    r.finish();
  }
  auto w = validate(s);
  if (warnings) warnings->insert(warnings->end(), w.begin(), w.end());
  return s;
}

inline Scenario parse_scenario(const std::string& text, const ParseOptions& opt = {},
                               std::vector<std::string>* warnings = nullptr) {
  return parse_scenario(io::parse_text(text, "<document>"), opt, warnings);
}

inline Json scenario_to_json(const Scenario& s) { return io::to_json(s); }

/// Plant document for the characterization command: a PvPlant object with an
/// optional "f_N" (default 60).
struct PlantDoc {
  PvPlant plant;
  double f_n = 60.0;
};

inline PlantDoc parse_plant(const Json& doc, const ParseOptions& opt = {}, std::vector<std::string>* warnings = nullptr) {
  PlantDoc out;
  Json body = doc;
  if (body.is_object() && body.contains("f_N")) {
    if (!body["f_N"].is_number()) throw ConfigError("expected a number", "f_N");
    out.f_n = body["f_N"].get<double>();
    body.erase("f_N");
  }
  if (body.is_object() && body.contains("schema_version")) body.erase("schema_version");
  {
    io::JsonReader r(body, "", opt.strict, warnings);
    io::read(r, out.plant);
    r.finish();
  }
  validate(out.plant, "plant");
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string() + ": " + std::strerror(errno));
  out << content;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string() + ": " + std::strerror(errno));
}

// ---------------------------------------------------------------------------
// Time series CSV

/// Fixed-point, 9 digits after the decimal point.
inline std::string format_fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  if (std::string_view(buf) == "-0.000000000") return "0.000000000";
  return buf;
}

inline std::string timeseries_csv(const SimResult& r) {
  std::string out = "t_s,f_hz,p_gov_pu,p_agc_pu";
  for (const auto& id : r.plant_ids) out += ",p_plant_" + id + "_pu";
  const bool two_area = !r.f_b_hz.empty();
  if (two_area) out += ",f_b_hz,dp_tie_pu";
  out += '\n';
  for (std::size_t k = 0; k < r.t.size(); ++k) {
    out += format_fixed(r.t[k]);
    out += ',' + format_fixed(r.f_hz[k]);
    out += ',' + format_fixed(r.p_gov[k]);
    out += ',' + format_fixed(r.p_agc[k]);
    for (const auto& p : r.p_plant) out += ',' + format_fixed(p[k]);
    if (two_area) {
      out += ',' + format_fixed(r.f_b_hz[k]);
      out += ',' + format_fixed(r.dp_tie[k]);
    }
    out += '\n';
  }
  return out;
}

inline void write_timeseries_csv(const SimResult& r, const std::filesystem::path& path) {
  write_file(path, timeseries_csv(r));
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(l);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    return cells;
  };
  if (!std::getline(in, line)) return t;
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& c : split(line)) row.push_back(std::stod(c));
    t.rows.push_back(std::move(row));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Metrics JSON

namespace io {

inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace io

inline Json metrics_to_json(const Metrics& m) {
  return {{"nadir_hz", io::number_or_null(m.nadir_hz)},
          {"t_nadir_s", io::number_or_null(m.t_nadir)},
          {"settling_hz", io::number_or_null(m.settling_hz)},
          {"rocof_max_hzps", io::number_or_null(m.rocof_max_hzps)},
          {"ufls_crossed", m.ufls_crossed},
          {"fr_mw_per_0p1hz", io::number_or_null(m.fr_measure)}};
}

inline Json metrics_to_json(const InertiaCharacterization& c) {
  return {{"rocof_hzps", io::number_or_null(c.rocof)},
          {"h_ss_s", io::number_or_null(c.h_ss)},
          {"h_ss_measured_s", io::number_or_null(c.h_ss_measured)},
          {"p_ss_measured_pu", io::number_or_null(c.p_ss_measured)},
          {"t_rise_s", io::number_or_null(c.t_rise)},
          {"t_rise_measured_s", io::number_or_null(c.t_rise_measured)},
          {"rocof_max_hzps", io::number_or_null(c.rocof_max)},
          {"clipped", c.clipped}};
}

inline Json metrics_to_json(const ComplianceReport& rep) {
  Json j = {{"final_dp_pu", io::number_or_null(rep.final_dp)}, {"pass", rep.pass()}};
  for (const auto& i : rep.items) {
    j[i.metric] = io::number_or_null(i.value);
    j[i.metric + "_limit"] = i.limit;
    j[i.metric + "_pass"] = i.pass;
  }
  return j;
}

template <class M>
void write_metrics_json(const M& m, const std::filesystem::path& path) {
  write_file(path, metrics_to_json(m).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Sweeps

/// One numeric field of `base` varied over `values`. `axis` is a dotted path
/// into the scenario document, with numeric segments indexing arrays
/// (e.g. "grid.penetration", "plants.0.p_headroom").
struct SweepSpec {
  std::string id;
  Scenario base;
  std::string axis;
  std::vector<double> values;
  std::vector<std::string> outputs{"nadir_hz", "t_nadir_s", "settling_hz", "rocof_max_hzps", "ufls_crossed"};
};

inline Json::json_pointer axis_pointer(const std::string& axis) {
  std::string ptr;
  std::istringstream in(axis);
  std::string seg;
  while (std::getline(in, seg, '.')) ptr += "/" + seg;
  return Json::json_pointer(ptr);
}

inline Scenario sweep_point(const SweepSpec& spec, double value) {
  Json doc = scenario_to_json(spec.base);
  const auto ptr = axis_pointer(spec.axis);
  if (!doc.contains(ptr) || !doc.at(ptr).is_number())
    throw ConfigError("sweep axis does not resolve to a numeric field", spec.axis);
  doc[ptr] = value;
  return parse_scenario(doc);
}

inline void validate(const SweepSpec& s) {
  detail::require(!s.values.empty(), "values", "must not be empty");
  detail::require(!s.outputs.empty(), "outputs", "must not be empty");
  for (const auto& o : s.outputs)
    detail::require(metrics_to_json(Metrics{}).contains(o), "outputs", "unknown metric '" + o + "'");
  (void)sweep_point(s, s.values.front());
}

inline SweepSpec parse_sweep(const Json& doc, const ParseOptions& opt = {}, std::vector<std::string>* warnings = nullptr) {
  SweepSpec s;
  {
    io::JsonReader r(doc, "", opt.strict, warnings);
    int version = kSchemaVersion;
    r.get("schema_version", version);
    r.get("id", s.id);
    const Json* base = r.child("base");
    if (!base) throw ConfigError("missing required key", "base");
    s.base = parse_scenario(*base, opt, warnings);
    r.require_key("axis", s.axis);
    r.require_key("values", s.values);
    r.get("outputs", s.outputs);
    r.finish();
  }
  validate(s);
  return s;
}

inline Json sweep_to_json(const SweepSpec& s) {
  return {{"schema_version", kSchemaVersion},
          {"id", s.id},
          {"base", scenario_to_json(s.base)},
          {"axis", s.axis},
          {"values", s.values},
          {"outputs", s.outputs}};
}

struct SweepRow {
  double value;
  Json metrics;
};

/// Table with the axis value in the first column and one column per output.
inline std::string sweep_csv(const SweepSpec& spec, const std::vector<SweepRow>& rows) {
  std::string out = spec.axis;
  for (const auto& o : spec.outputs) out += "," + o;
  out += '\n';
  for (const auto& r : rows) {
    out += format_fixed(r.value);
    for (const auto& o : spec.outputs) {
      const Json& v = r.metrics.at(o);
      out += ',';
      if (v.is_boolean()) out += v.get<bool>() ? "1" : "0";
      else if (v.is_number()) out += format_fixed(v.get<double>());
      else out += "nan";
    }
    out += '\n';
  }
  return out;
}

}  // namespace pvfreq
