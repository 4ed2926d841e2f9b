#pragma once

#include <cstddef>
#include <vector>

namespace pvfreq {

/// Classical fourth-order Runge-Kutta over a flat state vector. The slope
/// buffers are members so repeated steps do not allocate.
///
/// `deriv(t, x, dxdt)` must fill `dxdt` (already sized like `x`).
class Rk4Stepper {
public:
  template <class Deriv>
  void step(std::vector<double>& x, double t, double dt, Deriv&& deriv) {
    const std::size_t n = x.size();
    k1_.resize(n);
    k2_.resize(n);
    k3_.resize(n);
    k4_.resize(n);
    w_.resize(n);

    deriv(t, x, k1_);
    for (std::size_t i = 0; i < n; ++i) w_[i] = x[i] + 0.5 * dt * k1_[i];
    deriv(t + 0.5 * dt, w_, k2_);
    for (std::size_t i = 0; i < n; ++i) w_[i] = x[i] + 0.5 * dt * k2_[i];
    deriv(t + 0.5 * dt, w_, k3_);
    for (std::size_t i = 0; i < n; ++i) w_[i] = x[i] + dt * k3_[i];
    deriv(t + dt, w_, k4_);
    for (std::size_t i = 0; i < n; ++i) x[i] += dt / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
  }

private:
  std::vector<double> k1_, k2_, k3_, k4_, w_;
};

template <class Deriv>
std::vector<double> rk4_step(std::vector<double> x, double t, double dt, Deriv&& deriv) {
  Rk4Stepper stepper;
  stepper.step(x, t, dt, deriv);
  return x;
}

}  // namespace pvfreq
