#pragma once

// Classical RK4 on a flat state vector, landing exactly on requested times,
// with step halving until two successive refinements agree.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "bschain/errors.hpp"

namespace bschain::detail {

struct Rk4Run {
  std::vector<std::vector<double>> snapshots;
  double dt = 0.0;
  double achieved = 0.0;
};

// rhs(const std::vector<double>& y, std::vector<double>& dy)
template <typename Rhs>
std::vector<std::vector<double>> rk4_fixed(const std::vector<double>& y0, Rhs&& rhs, double t0,
                                           std::span<const double> times, double dt_max) {
  const std::size_t m = y0.size();
  std::vector<double> y = y0, k1(m), k2(m), k3(m), k4(m), tmp(m);
  std::vector<std::vector<double>> out;
  out.reserve(times.size());
  double t = t0;
  for (double target : times) {
    const double span = target - t;
    const long steps = span > 0.0 ? static_cast<long>(std::ceil(span / dt_max - 1e-9)) : 0;
    const double h = steps > 0 ? span / steps : 0.0;
    for (long s = 0; s < steps; ++s) {
      rhs(y, k1);
      for (std::size_t i = 0; i < m; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
      rhs(tmp, k2);
      for (std::size_t i = 0; i < m; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
      rhs(tmp, k3);
      for (std::size_t i = 0; i < m; ++i) tmp[i] = y[i] + h * k3[i];
      rhs(tmp, k4);
      for (std::size_t i = 0; i < m; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
    }
    t = target;
    out.push_back(y);
  }
  return out;
}

inline double max_diff(const std::vector<std::vector<double>>& a,
                       const std::vector<std::vector<double>>& b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j)
    for (std::size_t i = 0; i < a[j].size(); ++i) d = std::max(d, std::abs(a[j][i] - b[j][i]));
  return d;
}

template <typename Rhs>
Rk4Run rk4_adaptive(const std::vector<double>& y0, Rhs&& rhs, double t0, std::span<const double> times,
                    double dt_max, double tol, double dt_min) {
  for (std::size_t i = 0; i < times.size(); ++i)
    if (times[i] < (i ? times[i - 1] : t0)) throw InvalidParameter("snapshot times must be sorted and >= t0");
  double dt = dt_max;
  auto coarse = rk4_fixed(y0, rhs, t0, times, dt);
  double err = 0.0;
  for (;;) {
    const double half = 0.5 * dt;
    auto fine = rk4_fixed(y0, rhs, t0, times, half);
    err = max_diff(coarse, fine);
    if (err <= tol) return Rk4Run{std::move(fine), half, err};
    if (0.5 * half < dt_min)
      throw IntegratorFailure("RK4 step halving could not reach tol; achieved " + std::to_string(err), err);
    dt = half;
    coarse = std::move(fine);
  }
}

}  // namespace bschain::detail
