#include "bschain/moments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bschain/errors.hpp"
#include "bschain/rw.hpp"
#include "rk4.hpp"

namespace bschain {

namespace {

void require_stencil(int n) {
  if (n < 5) throw StencilWrap("near-diagonal stencil needs N >= 5, got N = " + std::to_string(n));
}

void check_params(const ChainParams& p, int n) {
  require_stencil(n);
  p.validate();
  if (p.n != n) throw InvalidParameter("parameter N does not match the state size");
}

int wrap(long x, int n) {
  long r = x % n;
  return static_cast<int>(r < 0 ? r + n : r);
}

}  // namespace

DiscreteField MomentState::energy() const {
  DiscreteField e(n());
  for (int x = 0; x < n(); ++x) e[x] = s(x, x);
  return e;
}

double MomentState::phi(long x, long y) const {
  const int a = wrap(x, n()), b = wrap(y, n());
  if (a == b) throw IndexError("phi is undefined on the diagonal");
  return s(a, b) - v[a] * v[b];
}

DiscreteField MomentState::compressibility() const {
  DiscreteField c(n());
  for (int x = 0; x < n(); ++x) c[x] = s(x, x) - v[x] * v[x];
  return c;
}

MomentState MomentState::from_profiles(const DiscreteField& v, const DiscreteField& e) {
  if (v.size() != e.size()) throw InvalidParameter("profile sizes differ");
  const int n = v.size();
  MomentState m{v, std::vector<double>(static_cast<std::size_t>(n) * n), 0.0};
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) m.s(x, y) = x == y ? e[x] : v[x] * v[y];
  return m;
}

MomentState MomentState::equilibrium(int n, double rho, double beta) {
  if (!(beta > 0.0)) throw InvalidParameter("beta must be > 0");
  return from_profiles(DiscreteField(n, rho), DiscreteField(n, rho * rho + 1.0 / beta));
}

CorrelationField::CorrelationField(int n, double fill) : n_(n) {
  if (n < 3) throw InvalidParameter("correlation field needs N >= 3");
  data_.assign(static_cast<std::size_t>(n) * n, fill);
  for (int x = 0; x < n; ++x) data_[static_cast<std::size_t>(x) * n + x] = 0.0;
}

std::size_t CorrelationField::index(long x, long y) const {
  const int a = wrap(x, n_), b = wrap(y, n_);
  if (a == b) throw IndexError("diagonal entry is outside the correlation domain");
  return static_cast<std::size_t>(a) * n_ + b;
}

double CorrelationField::at(long x, long y) const { return data_[index(x, y)]; }
double& CorrelationField::at(long x, long y) { return data_[index(x, y)]; }

double CorrelationField::max_abs() const noexcept {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

CorrelationField correlation(const MomentState& m) {
  CorrelationField c(m.n());
  for (int x = 0; x < m.n(); ++x)
    for (int y = 0; y < m.n(); ++y)
      if (x != y) c.at(x, y) = m.s(x, y) - m.v[x] * m.v[y];
  return c;
}

DiscreteField volume_rhs(const DiscreteField& v, const ChainParams& p) {
  DiscreteField out = laplacian_1d(v);
  const DiscreteField drift = grad_centered(v);
  const double c = 2.0 * p.alpha_n() * p.n;
  for (int x = 0; x < v.size(); ++x) out[x] += c * drift[x];
  return out;
}

void moment_system_rhs(std::span<const double> y, std::span<double> dy, const ChainParams& p) {
  const int n = p.n;
  const double n2 = static_cast<double>(n) * n;
  const double a = p.flow_speed();
  const double up = n2 + a, dn = n2 - a, c4 = 4.0 * n2;
  const double* v = y.data();
  const double* S = y.data() + n;
  double* dv = dy.data();
  double* dS = dy.data() + n;
  const auto row = [&](int x) { return S + static_cast<std::size_t>(x) * n; };

  for (int x = 0; x < n; ++x) {
    const int xp = x + 1 == n ? 0 : x + 1, xm = x == 0 ? n - 1 : x - 1;
    dv[x] = up * v[xp] + dn * v[xm] - 2.0 * n2 * v[x];
  }

  // Product stencil everywhere, then the near-diagonal corrections.
  for (int x = 0; x < n; ++x) {
    const int xp = x + 1 == n ? 0 : x + 1, xm = x == 0 ? n - 1 : x - 1;
    const double* r0 = row(x);
    const double* rp = row(xp);
    const double* rm = row(xm);
    double* out = dS + static_cast<std::size_t>(x) * n;
    out[0] = up * (rp[0] + r0[1]) + dn * (rm[0] + r0[n - 1]) - c4 * r0[0];
    for (int j = 1; j < n - 1; ++j) out[j] = up * (rp[j] + r0[j + 1]) + dn * (rm[j] + r0[j - 1]) - c4 * r0[j];
    out[n - 1] = up * (rp[n - 1] + r0[0]) + dn * (rm[n - 1] + r0[n - 2]) - c4 * r0[n - 1];
  }
  for (int x = 0; x < n; ++x) {
    const int xp = x + 1 == n ? 0 : x + 1, xm = x == 0 ? n - 1 : x - 1;
    const double ex = row(x)[x], ep = row(xp)[xp], em = row(xm)[xm];
    double* out = dS + static_cast<std::size_t>(x) * n;
    // A swap across the bond (x, x+1) leaves eta(x) eta(x+1) unchanged.
    out[xp] -= n2 * (ex + ep - 2.0 * row(x)[xp]);
    out[xm] -= n2 * (ex + em - 2.0 * row(x)[xm]);
    out[x] = n2 * (ep + em - 2.0 * ex) + 2.0 * a * (row(x)[xp] - row(xm)[x]);
  }
}

std::vector<double> second_moment_rhs(const MomentState& m, const ChainParams& p) {
  check_params(p, m.n());
  const int n = m.n();
  std::vector<double> y(static_cast<std::size_t>(n) * (n + 1)), dy(y.size());
  std::copy(m.v.data().begin(), m.v.data().end(), y.begin());
  std::copy(m.S.begin(), m.S.end(), y.begin() + n);
  moment_system_rhs(y, dy, p);
  return {dy.begin() + n, dy.end()};
}

DiscreteField g_source(const DiscreteField& v, const DiscreteField& e, const ChainParams& p) {
  const int n = v.size();
  const double a = p.flow_speed();
  DiscreteField g(n);
  for (int x = 0; x < n; ++x) {
    const int xp = x + 1 == n ? 0 : x + 1;
    const double grad = n * (v[xp] - v[x]);
    g[x] = a * (e[xp] - v[xp] * v[xp] - e[x] + v[x] * v[x]) - grad * grad;
  }
  return g;
}

DiscreteField g_source(const MomentState& m, const ChainParams& p) { return g_source(m.v, m.energy(), p); }

CorrelationField correlation_rhs(const CorrelationField& phi, const DiscreteField& g, const ChainParams& p) {
  const int n = phi.n();
  check_params(p, n);
  if (g.size() != n) throw InvalidParameter("source size mismatch");
  const double n2 = static_cast<double>(n) * n;
  const double up = n2 * (1.0 + p.alpha_n());
  const double dn = n2 * (1.0 - p.alpha_n());
  CorrelationField out(n);
  for (int x = 0; x < n; ++x) {
    for (int r = 1; r < n; ++r) {
      const long y = x + r;
      const double here = phi.at(x, y);
      double d = 0.0;
      if (r >= 2) d += up * (phi.at(x + 1, y) - here) + dn * (phi.at(x, y - 1) - here);
      if (r <= n - 2) d += up * (phi.at(x, y + 1) - here) + dn * (phi.at(x - 1, y) - here);
      if (r == 1) d += g[x];
      if (r == n - 1) d += g.at(x - 1);
      out.at(x, y) = d;
    }
  }
  return out;
}

DiscreteField energy_rhs(const DiscreteField& v, const DiscreteField& e, const CorrelationField& phi,
                         const ChainParams& p) {
  const int n = v.size();
  DiscreteField bond(n);
  for (int x = 0; x < n; ++x) bond[x] = phi.at(x - 1, x) + v.at(x - 1) * v[x];
  DiscreteField out = laplacian_1d(e);
  const DiscreteField flux = grad_forward(bond);
  const double c = 2.0 * p.alpha_n() * n;
  for (int x = 0; x < n; ++x) out[x] += c * flux[x];
  return out;
}

double default_moment_dt(const ChainParams& p) {
  return 0.2 / (4.0 * static_cast<double>(p.n) * p.n * (1.0 + p.alpha_n()));
}

MomentTrajectory evolve(const MomentState& initial, const ChainParams& p, double horizon,
                        std::span<const double> times, const EvolveOptions& opts) {
  const int n = initial.n();
  check_params(p, n);
  if (!(horizon >= 0.0)) throw InvalidParameter("horizon must be >= 0");
  std::vector<double> grid(times.begin(), times.end());
  if (grid.empty()) grid.push_back(initial.t + horizon);
  if (grid.back() > initial.t + horizon * (1.0 + 1e-12)) throw InvalidParameter("snapshot time beyond horizon");
  const double dt = opts.dt_max > 0.0 ? opts.dt_max : default_moment_dt(p);
  const std::size_t nn = static_cast<std::size_t>(n) * n;

  MomentTrajectory traj;
  if (opts.formulation == Formulation::SecondMoment) {
    std::vector<double> y0(n + nn);
    std::copy(initial.v.data().begin(), initial.v.data().end(), y0.begin());
    std::copy(initial.S.begin(), initial.S.end(), y0.begin() + n);
    auto rhs = [&](const std::vector<double>& y, std::vector<double>& dy) { moment_system_rhs(y, dy, p); };
    auto run = detail::rk4_adaptive(y0, rhs, initial.t, grid, dt, opts.tol, opts.dt_min);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto& y = run.snapshots[i];
      traj.snapshots.push_back(MomentState{DiscreteField(std::vector<double>(y.begin(), y.begin() + n)),
                                           std::vector<double>(y.begin() + n, y.end()), grid[i]});
    }
    traj.dt = run.dt;
    traj.achieved_error = run.achieved;
    return traj;
  }

  // (v, e, phi) packed with phi's unused diagonal kept at zero.
  const CorrelationField phi0 = correlation(initial);
  std::vector<double> y0(2 * n + nn);
  std::copy(initial.v.data().begin(), initial.v.data().end(), y0.begin());
  const DiscreteField e0 = initial.energy();
  std::copy(e0.data().begin(), e0.data().end(), y0.begin() + n);
  std::copy(phi0.raw().begin(), phi0.raw().end(), y0.begin() + 2 * n);
  auto rhs = [&](const std::vector<double>& y, std::vector<double>& dy) {
    const DiscreteField v(std::vector<double>(y.begin(), y.begin() + n));
    const DiscreteField e(std::vector<double>(y.begin() + n, y.begin() + 2 * n));
    CorrelationField phi(n);
    std::copy(y.begin() + 2 * n, y.end(), phi.raw().begin());
    const DiscreteField dv = volume_rhs(v, p);
    const DiscreteField de = energy_rhs(v, e, phi, p);
    const CorrelationField dphi = correlation_rhs(phi, g_source(v, e, p), p);
    std::copy(dv.data().begin(), dv.data().end(), dy.begin());
    std::copy(de.data().begin(), de.data().end(), dy.begin() + n);
    std::copy(dphi.raw().begin(), dphi.raw().end(), dy.begin() + 2 * n);
  };
  auto run = detail::rk4_adaptive(y0, rhs, initial.t, grid, dt, opts.tol, opts.dt_min);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& y = run.snapshots[i];
    MomentState m{DiscreteField(std::vector<double>(y.begin(), y.begin() + n)), std::vector<double>(nn), grid[i]};
    for (int x = 0; x < n; ++x)
      for (int z = 0; z < n; ++z)
        m.s(x, z) = x == z ? y[n + x] : y[2 * n + static_cast<std::size_t>(x) * n + z] + m.v[x] * m.v[z];
    traj.snapshots.push_back(std::move(m));
  }
  traj.dt = run.dt;
  traj.achieved_error = run.achieved;
  return traj;
}

CorrelationField duhamel_reconstruct(const CorrelationField& phi0, const std::vector<DiscreteField>& g_path,
                                     double h, const WalkKernel2D& kernel, const ChainParams& p) {
  const int n = phi0.n();
  check_params(p, n);
  if (g_path.empty()) throw DependencyError("empty source path");
  const std::size_t m = g_path.size() - 1;
  const std::size_t states = static_cast<std::size_t>(n) * (n - 1);
  if (kernel.n != n || kernel.steps < m || kernel.p.size() != states * (kernel.steps + 1))
    throw DependencyError("walk kernel does not cover the requested states and times");
  if (m > 0 && std::abs(kernel.h - h) > 1e-12 * h) throw DependencyError("walk kernel time step differs from source grid");

  // Source on the walk state space: g(x) on r = 1 and g(x-1) on r = N-1.
  std::vector<std::vector<double>> src(m + 1, std::vector<double>(states, 0.0));
  for (std::size_t j = 0; j <= m; ++j)
    for (int x = 0; x < n; ++x) {
      src[j][walk_index(n, x, 1)] = g_path[j][x];
      src[j][walk_index(n, x, n - 1)] = g_path[j].at(x - 1);
    }
  std::vector<double> phi_flat(states);
  for (int x = 0; x < n; ++x)
    for (int r = 1; r < n; ++r) phi_flat[walk_index(n, x, r)] = phi0.at(x, x + r);

  CorrelationField out(n);
  for (int x = 0; x < n; ++x)
    for (int r = 1; r < n; ++r) {
      const std::size_t start = walk_index(n, x, r);
      const auto& law_t = kernel.law(start, m);
      double acc = 0.0;
      for (std::size_t z = 0; z < states; ++z) acc += law_t[z] * phi_flat[z];
      double integral = 0.0;
      for (std::size_t j = 0; m > 0 && j <= m; ++j) {
        const auto& law = kernel.law(start, j);
        const auto& g = src[m - j];
        double s = 0.0;
        for (std::size_t z = 0; z < states; ++z) s += law[z] * g[z];
        integral += (j == 0 || j == m ? 0.5 : 1.0) * s;
      }
      out.at(x, x + r) = acc + h * integral;
    }
  return out;
}

std::string profile_csv(const std::vector<double>& times, const std::vector<DiscreteField>& fields) {
  std::ostringstream os;
  os.precision(17);
  os << "t,x,value\n";
  for (std::size_t i = 0; i < times.size(); ++i)
    for (int x = 0; x < fields[i].size(); ++x) os << times[i] << ',' << x << ',' << fields[i][x] << '\n';
  return os.str();
}

std::string correlation_csv(const std::vector<MomentState>& snapshots) {
  std::ostringstream os;
  os.precision(17);
  os << "t,x,y,value\n";
  for (const auto& m : snapshots)
    for (int x = 0; x < m.n(); ++x)
      for (int y = 0; y < m.n(); ++y)
        if (x != y) os << m.t << ',' << x << ',' << y << ',' << m.phi(x, y) << '\n';
  return os.str();
}

}  // namespace bschain
