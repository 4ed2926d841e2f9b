#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "pvfreq/blocks.hpp"
#include "pvfreq/rk4.hpp"

using namespace pvfreq;

namespace {

// Integrates a single-state block driven by u(t) and returns the trace of
// `out(x, u)` sampled every step.
template <class Deriv, class Out, class Input>
std::vector<double> integrate(double t_end, double dt, Input u, Deriv d, Out out) {
  std::vector<double> x(1, 0.0), trace;
  Rk4Stepper rk;
  const auto n = static_cast<long>(std::llround(t_end / dt));
  for (long k = 0; k <= n; ++k) {
    const double t = k * dt;
    trace.push_back(out(x[0], u(t)));
    if (k < n)
      rk.step(x, t, dt, [&](double tt, const std::vector<double>& s, std::vector<double>& ds) { ds[0] = d(s[0], u(tt)); });
  }
  return trace;
}

}  // namespace

TEST(Deadband, Examples) {
  EXPECT_EQ(deadband_apply(0.0, {0.0006}), 0.0);
  EXPECT_NEAR(deadband_apply(0.0010, {0.0006}), 0.0004, 1e-15);
  EXPECT_EQ(deadband_apply(-0.0010, {0.0}), -0.0010);
}

TEST(Deadband, StepVariantPassesSignalOutsideBand) {
  EXPECT_EQ(deadband_apply(0.0005, {0.0006, true}), 0.0);
  EXPECT_EQ(deadband_apply(0.0010, {0.0006, true}), 0.0010);
}

TEST(Deadband, OddAndContinuous) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> hw(0.0, 0.01), u(-0.05, 0.05);
  for (int i = 0; i < 10000; ++i) {
    const Deadband db{hw(rng)};
    const double x = u(rng);
    EXPECT_EQ(deadband_apply(-x, db), -deadband_apply(x, db));
    // Lipschitz-1 and zero at the band edge.
    EXPECT_LE(std::abs(deadband_apply(x + 1e-9, db) - deadband_apply(x, db)), 1e-9 * (1.0 + 1e-6));
    EXPECT_EQ(deadband_apply(db.half_width, db), 0.0);
  }
}

TEST(Deadband, NegativeHalfWidthRejected) {
  EXPECT_THROW(check_deadband({-1e-4}, "db"), ConfigError);
  EXPECT_NO_THROW(check_deadband({0.0}, "db"));
}

TEST(Lowpass, InitialSlopeAndStepResponse) {
  EXPECT_DOUBLE_EQ(lowpass_derivative({0.0}, 1.0, 1.0), 1.0);
  const auto y = integrate(
      1.0, 0.001, [](double) { return 1.0; }, [](double x, double u) { return lowpass_derivative({x}, u, 1.0); },
      [](double x, double) { return x; });
  EXPECT_NEAR(y.back(), 1.0 - std::exp(-1.0), 1e-9);
}

TEST(Lowpass, NonPositiveTimeConstantRejected) {
  EXPECT_THROW(check_time_constant(0.0, "T"), ConfigError);
  EXPECT_THROW(check_time_constant(-1.0, "T"), ConfigError);
}

TEST(Washout, BlocksDcAndLowpassPassesDc) {
  const double T = 0.3, c = 0.7;
  const auto wo = integrate(
      20 * T, 0.001, [&](double) { return c; }, [&](double x, double u) { return washout_output({x}, u, T).dx; },
      [&](double x, double u) { return washout_output({x}, u, T).y; });
  // Started from zero state, so the transient c*exp(-t/T) is still present.
  const double residual = c * std::exp(-20.0);
  EXPECT_NEAR(wo.back(), 0.0, residual + 1e-9);
  const auto lp = integrate(
      20 * T, 0.001, [&](double) { return c; }, [&](double x, double u) { return lowpass_derivative({x}, u, T); },
      [](double x, double) { return x; });
  EXPECT_NEAR(lp.back(), c, residual + 1e-9);
}

TEST(Washout, RampSettlesToSlopeTimesT) {
  const double m = 0.001, T = 0.1;
  const auto y = integrate(
      10 * T, 0.0005, [&](double t) { return m * t; }, [&](double x, double u) { return washout_output({x}, u, T).dx; },
      [&](double x, double u) { return washout_output({x}, u, T).y; });
  EXPECT_NEAR(y.back(), 0.0001, 0.0001 * 1e-3);
}

TEST(Washout, StepResponseDecaysExponentially) {
  const double T = 0.1, dt = 0.0005;
  // State starts at 0, so a unit input from t=0 is the step.
  const auto y = integrate(
      0.5, dt, [](double) { return 1.0; }, [&](double x, double u) { return washout_output({x}, u, T).dx; },
      [&](double x, double u) { return washout_output({x}, u, T).y; });
  EXPECT_EQ(y.front(), 1.0);
  for (std::size_t k = 0; k < y.size(); k += 50) EXPECT_NEAR(y[k], std::exp(-static_cast<double>(k) * dt / T), 1e-9);
}

TEST(Washout, LowpassCascadeKeepsRampSlope) {
  const double m = 0.002, T1 = 1.0, T2 = 0.1, dt = 0.001;
  std::vector<double> x(2, 0.0);
  Rk4Stepper rk;
  auto d = [&](double t, const std::vector<double>& s, std::vector<double>& ds) {
    ds[0] = lowpass_derivative({s[0]}, m * t, T1);
    ds[1] = washout_output({s[1]}, s[0], T2).dx;
  };
  const long n = 20000;
  for (long k = 0; k < n; ++k) rk.step(x, k * dt, dt, d);
  const double y = washout_output({x[1]}, x[0], T2).y;
  EXPECT_NEAR(y, m * T2, 0.005 * m * T2);
}

TEST(LeadLag, EqualTimeConstantsIsIdentity) {
  const auto r = lead_lag_output({0.3}, 0.8, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(r.y, 0.8);
}

TEST(Pi, Examples) {
  const auto z = pi_update({}, 0.0, 1.0, 1.0, 0.05);
  EXPECT_EQ(z.y, 0.0);
  EXPECT_EQ(z.d_integral, 0.0);

  std::vector<double> x(1, 0.0);
  Rk4Stepper rk;
  for (int k = 0; k < 1000; ++k)
    rk.step(x, k * 0.01, 0.01, [](double, const std::vector<double>& s, std::vector<double>& ds) {
      ds[0] = pi_update({s[0]}, 0.01, 0.0, 0.1, 1.0).d_integral;
    });
  EXPECT_NEAR(x[0], 0.01, 1e-12);
  EXPECT_NEAR(pi_update({x[0]}, 0.01, 0.0, 0.1, 1.0).y, 0.01, 1e-12);

  const auto c = pi_update({}, 5.0, 1.0, 0.1, 0.05);
  EXPECT_EQ(c.y, 0.05);
  EXPECT_TRUE(c.frozen);
  EXPECT_EQ(c.d_integral, 0.0);
}

TEST(Pi, AntiWindupNeverGrowsIntegralWhileClamped) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> e(-1.0, 1.0), gain(0.0, 5.0), lim(0.01, 0.5);
  for (int i = 0; i < 20000; ++i) {
    const double limit = lim(rng);
    std::uniform_real_distribution<double> integ(-limit, limit);
    const PiState s{integ(rng)};
    const double err = e(rng), kp = gain(rng), ki = gain(rng);
    const auto out = pi_update(s, err, kp, ki, limit);
    EXPECT_LE(std::abs(out.y), limit);
    const double raw = kp * err + s.integral;
    if (out.frozen) {
      EXPECT_EQ(out.d_integral, 0.0);
    }
    // Clamped on a limit: |integral| must not be driven towards that limit.
    if (raw > limit && s.integral >= 0.0) {
      EXPECT_LE(out.d_integral, 0.0);
    }
    if (raw < -limit && s.integral <= 0.0) {
      EXPECT_GE(out.d_integral, 0.0);
    }
  }
}

TEST(Pi, IntegralStaysWithinLimitUnderSustainedError) {
  std::vector<double> x(1, 0.0);
  Rk4Stepper rk;
  for (int k = 0; k < 5000; ++k) {
    rk.step(x, k * 0.01, 0.01, [](double, const std::vector<double>& s, std::vector<double>& ds) {
      ds[0] = pi_update({s[0]}, 0.3, 0.0, 2.0, 0.05).d_integral;
    });
    ASSERT_LE(x[0], 0.05 + 0.01 * 2.0 * 0.3);
  }
  EXPECT_NEAR(pi_update({x[0]}, 0.3, 0.0, 2.0, 0.05).y, 0.05, 1e-15);
}

TEST(Limiter, Examples) {
  EXPECT_EQ(limiter(0.10, -0.05, 0.05), 0.05);
  EXPECT_EQ(limiter(0.02, -0.05, 0.05), 0.02);
  EXPECT_EQ(limiter(-1.0, 0.0, 0.05), 0.0);
  EXPECT_THROW(limiter(0.0, 0.1, -0.1), ConfigError);
}

TEST(Limiter, Idempotent) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng), b = u(rng), x = u(rng);
    const double lo = std::min(a, b), hi = std::max(a, b);
    const double once = limiter(x, lo, hi);
    EXPECT_EQ(limiter(once, lo, hi), once);
  }
}
