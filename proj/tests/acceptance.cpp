// Acceptance checks. One PASS/FAIL line per criterion; exits 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "pvfreq/analyze.hpp"
#include "pvfreq/catalog.hpp"
#include "pvfreq/grid.hpp"
#include "pvfreq/rk4.hpp"
#include "pvfreq/simulate.hpp"

using namespace pvfreq;

namespace {

// Tolerances and limits.
constexpr double kRocofTol = 1e-6;           // Hz/s
constexpr double kRocofRuntime = 1.0;        // s
constexpr double kHssRelTol = 0.01;
constexpr double kPssRelTol = 0.01;
constexpr double kInertiaRuntime = 1.0;      // s
constexpr double kRiseRelTol = 0.05;
constexpr double kRiseRuntime = 10.0;        // s
constexpr double kClipBracket = 0.02;
constexpr double kGainFormRelTol = 1e-12;
constexpr double kTableRuntime = 30.0;       // s
constexpr double kAgcRestored = 1e-3;        // Hz
constexpr double kNoAgcOffset = 10e-3;       // Hz
constexpr double kConflictRatio = 0.2;
constexpr double kRk4OrderLo = 15.0;
constexpr double kRk4OrderHi = 17.0;
constexpr double kDtHalvingHz = 1e-4;
constexpr double kStepFinalRelTol = 0.005;

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Each criterion runs in isolation so an exception fails only that line.
void check(int id, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, false, std::string("exception: ") + e.what());
  }
}

void constant_rocof() {
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario s = catalog_scenario("rcc-closure");
  const auto r = run_scenario(s);
  const double expected = -rocof_from_imbalance(-s.events[0].delta_p * s.grid.C_system, s.grid.C_system,
                                                effective_inertia(s.grid), s.grid.f_N);
  // Slope over the 0.5 s right after the event.
  const auto i0 = static_cast<std::size_t>(std::llround(r.meta.t_event / r.meta.dt));
  const auto w = static_cast<std::size_t>(std::llround(0.5 / r.meta.dt));
  const double sim = (r.f_hz[i0 + w] - r.f_hz[i0]) / (r.t[i0 + w] - r.t[i0]);
  const double elapsed = seconds_since(t0);
  const double err = std::abs(sim - expected);
  report(1, err < kRocofTol && elapsed < kRocofRuntime,
         fmt("simulated RoCoF %.9f Hz/s, closed form %.9f Hz/s, |error| %.2e (< %.0e); runtime %.3f s (< %.0f s)", sim,
             expected, err, kRocofTol, elapsed, kRocofRuntime));
}

void steady_inertia() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto c = characterize_inertia(catalog::reference_inertia(), 0.06, 0.1);
  const double elapsed = seconds_since(t0);
  const double eh = std::abs(c.h_ss_measured - 25.0) / 25.0;
  const double ep = std::abs(c.p_ss_measured - 0.05) / 0.05;
  report(2, eh < kHssRelTol && ep < kPssRelTol && elapsed < kInertiaRuntime,
         fmt("H_ss measured %.4f s vs 25 s (rel %.2e < %.0e); P_ss %.6f pu vs 0.05 (rel %.2e < %.0e); runtime %.3f s", c.h_ss_measured,
             eh, kHssRelTol, c.p_ss_measured, ep, kPssRelTol, elapsed));
}

void rise_time() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto c = characterize_inertia(catalog::reference_inertia(), 0.06, 0.1);
  const double target = 2.208;
  const double e = std::abs(c.t_rise_measured - target) / target;
  std::string sweep;
  double worst = 0.0;
  for (double ratio : {0.1, 0.3, 1.0, 3.0, 10.0}) {
    InertiaCtrlParams p = catalog::reference_inertia();
    p.T_lpwi = p.T_wowi * ratio;
    p.p_limit = 10.0;
    const auto ci = characterize_inertia(p, 0.01, 10.0);
    const double dev = (ci.t_rise - ci.t_rise_measured) / ci.t_rise_measured;
    worst = std::max(worst, std::abs(dev));
    sweep += fmt(" %g:%+.1f%%", ratio, 100.0 * dev);
  }
  const double elapsed = seconds_since(t0);
  report(3, e < kRiseRelTol && elapsed < kRiseRuntime,
         fmt("measured 10-90%% rise %.4f s vs %.3f s (rel %.2e < %.0e); closed-form deviation by T_lpwi/T_wowi:%s "
             "(worst %.1f%%); runtime %.2f s",
             c.t_rise_measured, target, e, kRiseRelTol, sweep.c_str(), 100.0 * worst, elapsed));
}

void clipping_onset() {
  InertiaCtrlParams p = catalog::reference_inertia();
  p.p_limit = 0.05;
  const double h_ss = steady_state_inertia(p.K_i, p.T_wowi);
  const double onset = max_rocof(p.p_limit, h_ss, 60.0);
  const bool below = !characterize_inertia(p, onset * (1.0 - kClipBracket), p.p_limit).clipped;
  const bool above = characterize_inertia(p, onset * (1.0 + kClipBracket), p.p_limit).clipped;
  const double found = find_clipping_rocof(p, {0.01, 1.0, 0.0, 60.0}, 1e-4);

  std::mt19937_64 rng(20240607);
  std::uniform_real_distribution<double> hr(0.01, 0.5), ki(10.0, 2000.0), tw(0.01, 2.0), fn(49.0, 61.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double h = hr(rng), k = ki(rng), t = tw(rng), f = fn(rng);
    const double a = max_rocof(h, steady_state_inertia(k, t), f);
    const double b = max_rocof_from_gains(h, k, t, f);
    worst = std::max(worst, std::abs(a - b) / std::abs(b));
  }
  report(4, below && above && std::abs(found - 0.06) <= 0.06 * kClipBracket && worst <= kGainFormRelTol,
         fmt("closed-form onset %.6f Hz/s; unclipped at -2%%: %s, clipped at +2%%: %s; bisected onset %.6f Hz/s; "
             "gain-form max rel diff %.2e over 1000 draws (<= %.0e)",
             onset, below ? "yes" : "no", above ? "yes" : "no", found, worst, kGainFormRelTol));
}

void table_ordering() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto m1 = compute_metrics(run_scenario(catalog_scenario("table1-1")));
  const auto m2 = compute_metrics(run_scenario(catalog_scenario("table1-2")));
  const auto m3 = compute_metrics(run_scenario(catalog_scenario("table1-3")));
  const auto m4 = compute_metrics(run_scenario(catalog_scenario("table1-4")));
  const double elapsed = seconds_since(t0);
  const bool a = m1.t_nadir > m4.t_nadir;
  const bool b = m2.settling_hz > m4.settling_hz;
  const bool c = m3.nadir_hz >= std::max(m1.nadir_hz, m2.nadir_hz);
  report(5, a && b && c && elapsed < kTableRuntime,
         fmt("(a) t_nadir inertia %.2f s > none %.2f s: %s; (b) settling droop %.4f Hz > none %.4f Hz: %s; "
             "(c) nadir combined %.4f Hz >= max(%.4f, %.4f): %s; runtime %.2f s",
             m1.t_nadir, m4.t_nadir, a ? "yes" : "no", m2.settling_hz, m4.settling_hz, b ? "yes" : "no", m3.nadir_hz,
             m1.nadir_hz, m2.nadir_hz, c ? "yes" : "no", elapsed));
}

void agc_restoration() {
  const auto with = run_scenario(catalog_scenario("agc"));
  const auto without = compute_metrics(run_scenario(catalog_scenario("no-agc")));
  const double df_end = std::abs(with.f_hz.back() - with.meta.f_n);
  const double df_no = std::abs(without.settling_hz - 60.0);
  report(6, df_end < kAgcRestored && df_no > kNoAgcOffset,
         fmt("with AGC |df| at t=%.0f s = %.3e Hz (< %.0e); without AGC |settling df| = %.4f Hz (> %.0e)", with.t.back(),
             df_end, kAgcRestored, df_no, kNoAgcOffset));
}

void fast_pfc() {
  const auto fast = compute_metrics(run_scenario(catalog_scenario("fast-pfc")));
  const auto droop = compute_metrics(run_scenario(catalog_scenario("table1-2")));
  const double margin = fast.nadir_hz - droop.nadir_hz;
  report(7, margin > 0.0,
         fmt("nadir fast-PFC %.4f Hz vs droop-only %.4f Hz, margin %+.4f Hz (headroom 0.1 pu both)", fast.nadir_hz,
             droop.nadir_hz, margin));
}

void deadband_conflict() {
  const auto db = run_scenario(catalog_scenario("multifarm-db"));
  const auto nodb = run_scenario(catalog_scenario("multifarm-nodb"));
  const double from = catalog::kMultifarmSettledFrom;
  const double a = conflict_index(db, from).mean_std;
  const double b = conflict_index(nodb, from).mean_std;
  const double ratio = a / b;
  report(8, ratio < kConflictRatio,
         fmt("conflict index (t >= %.0f s) with integral deadband %.3e pu, without %.3e pu, ratio %.3f (< %.1f); seed %llu",
             from, a, b, ratio, kConflictRatio,
             static_cast<unsigned long long>(catalog_scenario("multifarm-db").sim.rng_seed)));
}

double exp_error(double dt) {
  std::vector<double> x{1.0};
  Rk4Stepper rk;
  const auto n = static_cast<long>(std::llround(1.0 / dt));
  for (long k = 0; k < n; ++k)
    rk.step(x, k * dt, dt, [](double, const std::vector<double>& s, std::vector<double>& d) { d[0] = -s[0]; });
  return std::abs(x[0] - std::exp(-1.0));
}

void numerics() {
  const double order = exp_error(0.1) / exp_error(0.05);
  double worst = 0.0;
  for (const char* id : {"table1-1", "table1-2", "table1-3", "table1-4"}) {
    const auto s = catalog_scenario(id);
    SimConfig fine = s.sim;
    fine.dt /= 2.0;
    worst = std::max(worst, std::abs(compute_metrics(run_scenario(s)).nadir_hz -
                                     compute_metrics(run_scenario(s, fine)).nadir_hz));
  }
  const auto s = catalog_scenario("multifarm-nodb");
  const auto a = run_scenario(s);
  const auto b = run_scenario(s);
  const bool same = a.f_hz == b.f_hz && a.p_plant == b.p_plant;
  report(9, order > kRk4OrderLo && order < kRk4OrderHi && worst < kDtHalvingHz && same,
         fmt("RK4 error ratio at dt halving %.2f (in (%.0f, %.0f)); max nadir change at dt/2 %.2e Hz (< %.0e); "
             "repeat run bit-identical: %s",
             order, kRk4OrderLo, kRk4OrderHi, worst, kDtHalvingHz, same ? "yes" : "no"));
}

void step_test() {
  PvPlant p;
  p.id = "pv";
  p.p_base = 0.6;
  p.p_headroom = 0.2;
  p.controllers.droop = catalog::reference_droop();
  p.controllers.droop->K_g = 20.0;  // 5% droop
  p.controllers.droop->db_pu = 0.0;
  const double step = 0.002, t_step = 1.0;
  const auto r =
      run_prescribed_frequency(p, [&](double t) { return t >= t_step ? -step : 0.0; }, {0.01, 30.0, 1, 1});
  const auto rep = nerc_step_compliance(r, step, t_step);
  const double e = std::abs(rep.final_dp - 0.04) / 0.04;
  std::string items;
  bool all = true;
  for (const char* m : {"reaction_time", "rise_time", "settling_time", "overshoot", "settling_band"}) {
    try {
      items += fmt(" %s=%.3f", m, rep.at(m).value);
    } catch (const std::out_of_range&) {
      all = false;
    }
  }
  report(10, e < kStepFinalRelTol && all && rep.items.size() == 5,
         fmt("final dP %.6f pu vs 0.04 (rel %.2e < %.0e); metrics:%s", rep.final_dp, e, kStepFinalRelTol, items.c_str()));
}

}  // namespace

int main() {
  check(1, constant_rocof);
  check(2, steady_inertia);
  check(3, rise_time);
  check(4, clipping_onset);
  check(5, table_ordering);
  check(6, agc_restoration);
  check(7, fast_pfc);
  check(8, deadband_conflict);
  check(9, numerics);
  check(10, step_test);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
