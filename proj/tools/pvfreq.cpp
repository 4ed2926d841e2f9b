// pvfreq: command-line front end for the grid frequency-response simulator.
//
//   pvfreq run <scenario.json | catalog-id>
//   pvfreq characterize <plant.json> --rocof <hz/s> [--step <pu>]
//   pvfreq sweep <sweep.json | catalog-id>
//   pvfreq compare <scenario> <scenario> ...
//   pvfreq catalog
//
// Exit codes: 0 success, 1 usage or validation error, 2 numerical abort.

#include <atomic>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "pvfreq/analyze.hpp"
#include "pvfreq/catalog.hpp"
#include "pvfreq/scenario_io.hpp"
#include "pvfreq/simulate.hpp"

namespace fs = std::filesystem;
using namespace pvfreq;

namespace {

struct GlobalOpts {
  std::string out_dir;
  std::optional<double> dt;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool lenient = false;
  std::string format = "csv";
};

void print_warnings(const std::vector<std::string>& w) {
  for (const auto& s : w) std::cerr << "warning: " << s << "\n";
}

ParseOptions parse_opts(const GlobalOpts& g) { return {!g.lenient}; }

// A catalog id or a path to a JSON document.
std::variant<Scenario, SweepSpec> load(const std::string& ref, const GlobalOpts& g) {
  const auto cat = builtin_catalog();
  if (const auto* e = find_catalog_entry(cat, ref)) return e->item;
  std::vector<std::string> warnings;
  const Json doc = io::parse_text(read_file(ref), ref);
  std::variant<Scenario, SweepSpec> out;
  if (doc.is_object() && doc.contains("axis"))
    out = parse_sweep(doc, parse_opts(g), &warnings);
  else
    out = parse_scenario(doc, parse_opts(g), &warnings);
  print_warnings(warnings);
  return out;
}

Scenario load_scenario(const std::string& ref, const GlobalOpts& g) {
  auto v = load(ref, g);
  if (std::holds_alternative<SweepSpec>(v)) throw ConfigError("'" + ref + "' is a sweep, not a scenario");
  return std::get<Scenario>(v);
}

SimConfig effective_config(const Scenario& s, const GlobalOpts& g) {
  SimConfig c = s.sim;
  if (g.dt) c.dt = *g.dt;
  if (g.seed) c.rng_seed = *g.seed;
  return c;
}

fs::path out_path(const GlobalOpts& g, const std::string& name) {
  fs::path dir = g.out_dir.empty() ? fs::path(".") : fs::path(g.out_dir);
  fs::create_directories(dir);
  return dir / name;
}

Json run_metrics(const Scenario& s, const GlobalOpts& g, SimResult* keep = nullptr) {
  const SimResult r = run_scenario(s, effective_config(s, g));
  Json m = metrics_to_json(compute_metrics(r));
  if (s.plants.size() >= 2) {
    const auto ci = conflict_index(r, std::min(catalog::kMultifarmSettledFrom, r.t.back()));
    m["conflict_mean_std_pu"] = ci.mean_std;
    m["conflict_max_divergence_pu"] = ci.max_divergence;
  }
  if (keep) *keep = r;
  return m;
}

// Runs each point of a sweep on up to `jobs` threads; rows keep sweep order.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, const GlobalOpts& g) {
  std::vector<Scenario> points;
  for (double v : spec.values) points.push_back(sweep_point(spec, v));
  std::vector<SweepRow> rows(points.size());
  std::vector<std::exception_ptr> errors(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      try {
        rows[i] = {spec.values[i], run_metrics(points[i], g)};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(g.jobs, static_cast<int>(points.size())));
  std::vector<std::thread> pool;
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

void emit(const GlobalOpts& g, const std::string& file, const std::string& content) {
  if (g.out_dir.empty()) {
    std::cout << content;
  } else {
    write_file(out_path(g, file), content);
    std::cout << "wrote " << out_path(g, file).string() << "\n";
  }
}

int cmd_run(const std::string& ref, const GlobalOpts& g) {
  auto item = load(ref, g);
  if (auto* sweep = std::get_if<SweepSpec>(&item)) {
    const auto rows = run_sweep(*sweep, g);
    emit(g, sweep->id + ".sweep.csv", sweep_csv(*sweep, rows));
    return 0;
  }
  const auto& s = std::get<Scenario>(item);
  SimResult r;
  const Json m = run_metrics(s, g, &r);
  const std::string id = s.id.empty() ? "scenario" : s.id;
  write_timeseries_csv(r, out_path(g, id + ".csv"));
  write_file(out_path(g, id + ".metrics.json"), m.dump(2) + "\n");
  std::cout << m.dump(2) << "\n";
  if (r.meta.max_event_snap_s > 0.0)
    std::cerr << "note: events snapped to the step grid by up to " << r.meta.max_event_snap_s << " s\n";
  return 0;
}

int cmd_characterize(const std::string& path, std::optional<double> rocof, std::optional<double> step,
                     const GlobalOpts& g) {
  std::vector<std::string> warnings;
  const PlantDoc doc = parse_plant(io::parse_text(read_file(path), path), parse_opts(g), &warnings);
  print_warnings(warnings);
  const auto& plant = doc.plant;
  Json out = Json::object();
  if (rocof) {
    if (!plant.controllers.inertia) throw ConfigError("plant has no inertia controller", "controllers.inertia");
    CharacterizeOptions opt;
    opt.f_n = doc.f_n;
    if (g.dt) opt.dt = *g.dt;
    const auto& ip = *plant.controllers.inertia;
    const auto c = characterize_inertia(ip, *rocof, plant.p_headroom, opt);
    out = metrics_to_json(c);
    if (ip.K_i * ip.T_wowi > 0.0)
      out["rocof_max_from_gains_hzps"] = max_rocof_from_gains(plant.p_headroom, ip.K_i, ip.T_wowi, doc.f_n);
  }
  if (step) {
    SimConfig cfg{g.dt.value_or(0.01), 30.0, 1, g.seed.value_or(1)};
    const double t_step = 1.0;
    const double s = *step;
    const auto r = run_prescribed_frequency(plant, [=](double t) { return t >= t_step ? -s : 0.0; }, cfg, doc.f_n);
    out["step_response"] = metrics_to_json(nerc_step_compliance(r, s, t_step));
  }
  if (!rocof && !step) throw ConfigError("give --rocof and/or --step");
  const std::string name = plant.id.empty() ? "plant" : plant.id;
  emit(g, name + ".characterization.json", out.dump(2) + "\n");
  return 0;
}

int cmd_sweep(const std::string& ref, const GlobalOpts& g) {
  auto item = load(ref, g);
  const auto* spec = std::get_if<SweepSpec>(&item);
  if (!spec) throw ConfigError("'" + ref + "' is not a sweep");
  const auto rows = run_sweep(*spec, g);
  if (g.format == "json") {
    Json j = Json::array();
    for (const auto& r : rows) j.push_back({{"value", r.value}, {"metrics", r.metrics}});
    emit(g, spec->id + ".sweep.json", j.dump(2) + "\n");
  } else {
    emit(g, spec->id + ".sweep.csv", sweep_csv(*spec, rows));
  }
  return 0;
}

int cmd_compare(const std::vector<std::string>& refs, const GlobalOpts& g) {
  std::vector<std::pair<std::string, Json>> cols;
  for (const auto& ref : refs) {
    const Scenario s = load_scenario(ref, g);
    cols.emplace_back(s.id, run_metrics(s, g));
  }
  if (g.format == "json") {
    Json j = Json::object();
    for (const auto& [id, m] : cols) j[id] = m;
    emit(g, "compare.json", j.dump(2) + "\n");
    return 0;
  }
  std::string out = "metric";
  for (const auto& [id, m] : cols) out += "," + id;
  out += "\n";
  for (const auto& [key, v] : cols.front().second.items()) {
    out += key;
    for (const auto& [id, m] : cols) {
      out += ",";
      const Json& x = m.contains(key) ? m.at(key) : Json(nullptr);
      if (x.is_boolean()) out += x.get<bool>() ? "1" : "0";
      else if (x.is_number()) out += format_fixed(x.get<double>());
      else out += "nan";
    }
    out += "\n";
  }
  emit(g, "compare.csv", out);
  return 0;
}

int cmd_catalog(const GlobalOpts& g) {
  for (const auto& e : builtin_catalog()) {
    std::cout << e.id << (e.is_sweep() ? "  [sweep]  " : "  ") << e.description << "\n";
    if (!g.out_dir.empty()) {
      const Json doc = e.is_sweep() ? sweep_to_json(std::get<SweepSpec>(e.item))
                                    : scenario_to_json(std::get<Scenario>(e.item));
      write_file(out_path(g, e.id + ".json"), doc.dump(2) + "\n");
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grid frequency response simulator with PV frequency-support controls"};
  app.require_subcommand(1);
  GlobalOpts g;
  app.add_option("--out", g.out_dir, "Output directory");
  app.add_option("--dt", g.dt, "Integration step override (s)")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "RNG seed override");
  app.add_option("--jobs", g.jobs, "Parallel scenario runs for sweeps")->check(CLI::PositiveNumber);
  auto* strict = app.add_flag("--strict", "Reject unknown keys (default)");
  app.add_flag("--lenient", g.lenient, "Warn on unknown keys instead of rejecting")->excludes(strict);
  app.add_option("--format", g.format, "Table output format")->check(CLI::IsMember({"csv", "json"}));
  app.fallthrough();

  std::string scenario_ref;
  auto* run = app.add_subcommand("run", "Simulate a scenario (file or catalog id); writes CSV + metrics JSON");
  run->add_option("scenario", scenario_ref, "Scenario JSON path or catalog id")->required();

  std::string plant_path;
  std::optional<double> rocof, step;
  auto* characterize = app.add_subcommand("characterize", "Virtual inertia characterization of a plant");
  characterize->add_option("plant", plant_path, "Plant JSON path")->required();
  characterize->add_option("--rocof", rocof, "ROCOF step magnitude (Hz/s)")->check(CLI::PositiveNumber);
  characterize->add_option("--step", step, "Frequency step for the step-response compliance test (pu)");

  std::string sweep_ref;
  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep; writes a metrics table");
  sweep->add_option("sweep", sweep_ref, "Sweep JSON path or catalog id")->required();

  std::vector<std::string> compare_refs;
  auto* compare = app.add_subcommand("compare", "Side-by-side metrics for several scenarios");
  compare->add_option("scenarios", compare_refs, "Scenario JSON paths or catalog ids")->required()->expected(1, -1);

  auto* catalog = app.add_subcommand("catalog", "List built-in scenarios (--out exports them as JSON)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*run) return cmd_run(scenario_ref, g);
    if (*characterize) return cmd_characterize(plant_path, rocof, step, g);
    if (*sweep) return cmd_sweep(sweep_ref, g);
    if (*compare) return cmd_compare(compare_refs, g);
    if (*catalog) return cmd_catalog(g);
  } catch (const NumericalError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
