#include "bschain/rw.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "bschain/errors.hpp"
#include "bschain/lattice.hpp"
#include "rk4.hpp"

namespace bschain {

namespace {

void check_mass(std::span<const double> p, const char* what) {
  double sum = 0.0;
  for (double v : p) {
    if (v < -1e-12) throw NumericalError(std::string(what) + ": negative probability");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw NumericalError(std::string(what) + ": mass differs from 1");
}

int wrap(long x, int n) {
  long r = x % n;
  return static_cast<int>(r < 0 ? r + n : r);
}

double walk_dt(int n, double alpha_n, const WalkSolveOptions& opts) {
  return opts.dt_max > 0.0 ? opts.dt_max : 0.2 / (4.0 * n * n * (1.0 + alpha_n));
}

void check_alpha(double alpha_n) {
  if (!(alpha_n >= 0.0 && alpha_n < 1.0))
    throw InvalidParameter("alpha_N must lie in [0, 1) for non-negative walk rates");
}

void generator_2d_into(std::span<const double> p, std::span<double> dp, int n, double alpha_n) {
  const double n2 = static_cast<double>(n) * n;
  const double up = n2 * (1.0 + alpha_n);
  const double down = n2 * (1.0 - alpha_n);
  std::fill(dp.begin(), dp.end(), 0.0);
  for (int x = 0; x < n; ++x) {
    const int xp = x + 1 == n ? 0 : x + 1;
    const int xm = x == 0 ? n - 1 : x - 1;
    for (int r = 1; r < n; ++r) {
      const double m = p[walk_index(n, x, r)];
      if (m == 0.0) continue;
      double out = 0.0;
      if (r >= 2) {  // +x and -y
        dp[walk_index(n, xp, r - 1)] += up * m;
        dp[walk_index(n, x, r - 1)] += down * m;
        out += up + down;
      }
      if (r <= n - 2) {  // +y and -x
        dp[walk_index(n, x, r + 1)] += up * m;
        dp[walk_index(n, xm, r + 1)] += down * m;
        out += up + down;
      }
      dp[walk_index(n, x, r)] -= out * m;
    }
  }
}

void generator_1d_into(std::span<const double> q, std::span<double> dq, int n) {
  const double rate = 2.0 * n * n;
  const int m = n - 1;
  std::fill(dq.begin(), dq.end(), 0.0);
  for (int i = 0; i < m; ++i) {
    if (i > 0) {
      dq[i - 1] += rate * q[i];
      dq[i] -= rate * q[i];
    }
    if (i < m - 1) {
      dq[i + 1] += rate * q[i];
      dq[i] -= rate * q[i];
    }
  }
}

}  // namespace

double WalkDistribution2D::at(long x, long y) const { return p[walk_index_xy(n, x, y)]; }

void WalkDistribution2D::validate() const { check_mass(p, "2D walk law"); }

void WalkDistribution1D::validate() const { check_mass(q, "1D walk law"); }

std::size_t walk_index_xy(int n, long x, long y) {
  const int r = wrap(y - x, n);
  if (r == 0) throw IndexError("diagonal pair is not a walk state");
  return walk_index(n, wrap(x, n), r);
}

WalkDistribution2D delta_2d(int n, long x, long y) {
  if (n < 3) throw InvalidParameter("2D walk needs N >= 3");
  WalkDistribution2D d{n, std::vector<double>(static_cast<std::size_t>(n) * (n - 1), 0.0), 0.0};
  d.p[walk_index_xy(n, x, y)] = 1.0;
  return d;
}

WalkDistribution2D uniform_2d(int n) {
  if (n < 3) throw InvalidParameter("2D walk needs N >= 3");
  const std::size_t m = static_cast<std::size_t>(n) * (n - 1);
  return {n, std::vector<double>(m, 1.0 / static_cast<double>(m)), 0.0};
}

WalkDistribution1D delta_1d(int n, int r) {
  if (n < 3) throw InvalidParameter("1D walk needs N >= 3");
  if (r < 1 || r > n - 1) throw IndexError("r must lie in 1..N-1");
  WalkDistribution1D d{n, std::vector<double>(static_cast<std::size_t>(n - 1), 0.0), 0.0};
  d.q[static_cast<std::size_t>(r - 1)] = 1.0;
  return d;
}

std::vector<double> generator_2d(std::span<const double> p, int n, double alpha_n) {
  check_alpha(alpha_n);
  if (p.size() != static_cast<std::size_t>(n) * (n - 1)) throw InvalidParameter("law size mismatch");
  std::vector<double> dp(p.size());
  generator_2d_into(p, dp, n, alpha_n);
  return dp;
}

std::vector<double> generator_1d(std::span<const double> q, int n) {
  if (q.size() != static_cast<std::size_t>(n - 1)) throw InvalidParameter("law size mismatch");
  std::vector<double> dq(q.size());
  generator_1d_into(q, dq, n);
  return dq;
}

std::vector<WalkDistribution2D> forward_solve_2d(const WalkDistribution2D& p0, double alpha_n,
                                                 double horizon, std::span<const double> schedule,
                                                 const WalkSolveOptions& opts) {
  check_alpha(alpha_n);
  p0.validate();
  if (!(horizon >= 0.0)) throw InvalidParameter("horizon must be >= 0");
  if (!schedule.empty() && schedule.back() > p0.t + horizon * (1 + 1e-12))
    throw InvalidParameter("schedule exceeds horizon");
  const int n = p0.n;
  auto rhs = [&](const std::vector<double>& y, std::vector<double>& dy) { generator_2d_into(y, dy, n, alpha_n); };
  auto run = detail::rk4_adaptive(p0.p, rhs, p0.t, schedule, walk_dt(n, alpha_n, opts), opts.tol, opts.dt_min);
  std::vector<WalkDistribution2D> out;
  for (std::size_t i = 0; i < schedule.size(); ++i) out.push_back({n, std::move(run.snapshots[i]), schedule[i]});
  return out;
}

std::vector<WalkDistribution1D> forward_solve_1d(const WalkDistribution1D& q0, double horizon,
                                                 std::span<const double> schedule,
                                                 const WalkSolveOptions& opts) {
  q0.validate();
  if (!(horizon >= 0.0)) throw InvalidParameter("horizon must be >= 0");
  if (!schedule.empty() && schedule.back() > q0.t + horizon * (1 + 1e-12))
    throw InvalidParameter("schedule exceeds horizon");
  const int n = q0.n;
  auto rhs = [&](const std::vector<double>& y, std::vector<double>& dy) { generator_1d_into(y, dy, n); };
  auto run = detail::rk4_adaptive(q0.q, rhs, q0.t, schedule, walk_dt(n, 0.0, opts), opts.tol, opts.dt_min);
  std::vector<WalkDistribution1D> out;
  for (std::size_t i = 0; i < schedule.size(); ++i) out.push_back({n, std::move(run.snapshots[i]), schedule[i]});
  return out;
}

WalkDistribution1D project_to_1d(const WalkDistribution2D& p) {
  const int n = p.n;
  WalkDistribution1D q{n, std::vector<double>(static_cast<std::size_t>(n - 1), 0.0), p.t};
  for (int x = 0; x < n; ++x)
    for (int r = 1; r < n; ++r) q.q[static_cast<std::size_t>(r - 1)] += p.p[walk_index(n, x, r)];
  return q;
}

double local_time(int n, int r0, double horizon, const WalkSolveOptions& opts) {
  if (!(horizon >= 0.0)) throw InvalidParameter("horizon must be >= 0");
  const WalkDistribution1D q0 = delta_1d(n, r0);
  if (horizon == 0.0) return 0.0;
  const std::size_t m = q0.q.size();
  std::vector<double> y0 = q0.q;
  y0.push_back(0.0);
  auto rhs = [&](const std::vector<double>& y, std::vector<double>& dy) {
    generator_1d_into(std::span<const double>(y.data(), m), std::span<double>(dy.data(), m), n);
    dy[m] = y[0] + y[m - 1];
  };
  const double times[] = {horizon};
  auto run = detail::rk4_adaptive(y0, rhs, 0.0, times, walk_dt(n, 0.0, opts), opts.tol * horizon, opts.dt_min);
  return run.snapshots[0][m];
}

WalkKernel2D transition_kernel_2d(int n, double alpha_n, double h, std::size_t steps,
                                  const WalkSolveOptions& opts) {
  if (!(h > 0.0)) throw InvalidParameter("kernel step must be > 0");
  WalkKernel2D k{n, h, steps, {}};
  std::vector<double> grid(steps);
  for (std::size_t j = 0; j < steps; ++j) grid[j] = h * static_cast<double>(j + 1);
  const std::size_t states = static_cast<std::size_t>(n) * (n - 1);
  k.p.reserve(states * (steps + 1));
  for (std::size_t s = 0; s < states; ++s) {
    WalkDistribution2D d{n, std::vector<double>(states, 0.0), 0.0};
    d.p[s] = 1.0;
    auto laws = forward_solve_2d(d, alpha_n, h * static_cast<double>(steps), grid, opts);
    k.p.push_back(d.p);
    for (auto& l : laws) k.p.push_back(std::move(l.p));
  }
  return k;
}

std::size_t sample_walk_2d(int n, double alpha_n, std::size_t start, double horizon, std::mt19937_64& rng) {
  check_alpha(alpha_n);
  const double n2 = static_cast<double>(n) * n;
  const double up = n2 * (1.0 + alpha_n);
  const double down = n2 * (1.0 - alpha_n);
  int x = static_cast<int>(start / static_cast<std::size_t>(n - 1));
  int r = static_cast<int>(start % static_cast<std::size_t>(n - 1)) + 1;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double t = 0.0;
  for (;;) {
    const bool lo = r >= 2, hi = r <= n - 2;
    const double total = (lo ? up + down : 0.0) + (hi ? up + down : 0.0);
    t += std::exponential_distribution<double>(total)(rng);
    if (t > horizon) break;
    double u = unif(rng) * total;
    if (lo) {
      if (u < up) { x = x + 1 == n ? 0 : x + 1; --r; continue; }
      u -= up;
      if (u < down) { --r; continue; }
      u -= down;
    }
    if (u < up) { ++r; continue; }
    x = x == 0 ? n - 1 : x - 1;
    ++r;
  }
  return walk_index(n, x, r);
}

double srw_transition(long x, long y, double t, int n) {
  if (!(t >= 0.0)) throw InvalidParameter("t must be >= 0");
  const long d = wrap(x - y, n);
  Complex sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const double s = std::sin(std::numbers::pi * k / n);
    const double decay = std::exp(-4.0 * n * n * s * s * t);
    const double ph = -2.0 * std::numbers::pi * static_cast<double>((k * d) % n) / n;
    sum += decay * Complex(std::cos(ph), std::sin(ph));
  }
  sum /= static_cast<double>(n);
  if (std::abs(sum.imag()) > 1e-10) throw NumericalError("transition probability has imaginary residue");
  return sum.real();
}

std::vector<double> srw_row(int n, double t) {
  if (!(t >= 0.0)) throw InvalidParameter("t must be >= 0");
  std::vector<double> decay(n), cosines(n), row(n, 0.0);
  for (int k = 0; k < n; ++k) {
    const double s = std::sin(std::numbers::pi * k / n);
    decay[k] = std::exp(-4.0 * n * n * s * s * t);
    cosines[k] = std::cos(2.0 * std::numbers::pi * k / n);
  }
  for (int d = 0; d < n; ++d) {
    double acc = 0.0;
    for (int k = 0; k < n; ++k) acc += decay[k] * cosines[(static_cast<long>(k) * d) % n];
    row[d] = acc / n;
  }
  return row;
}

SrwBoundReport srw_derivative_bounds(int n, std::span<const double> t_grid) {
  SrwBoundReport rep;
  rep.n = n;
  for (double t : t_grid) {
    if (!(t > 0.0)) throw InvalidParameter("t-grid must be positive");
    const auto f = srw_row(n, t);
    double lap = 0.0, grad = 0.0;
    for (int d = 0; d < n; ++d) {
      const double fp = f[(d + 1) % n], fm = f[(d + n - 1) % n];
      lap = std::max(lap, std::abs(static_cast<double>(n) * n * (fp + fm - 2.0 * f[d])));
      grad = std::max(grad, std::abs(n * (fp - f[d])));
    }
    rep.t.push_back(t);
    rep.lap_scaled.push_back(n * std::pow(t, 1.5) * lap);
    rep.grad_scaled.push_back(n * t * grad);
    rep.sup_lap = std::max(rep.sup_lap, rep.lap_scaled.back());
    rep.sup_grad = std::max(rep.sup_grad, rep.grad_scaled.back());
  }
  return rep;
}

std::string bound_report_csv(const std::vector<SrwBoundReport>& reports) {
  std::ostringstream os;
  os.precision(17);
  os << "N,t,quantity,value\n";
  for (const auto& r : reports)
    for (std::size_t i = 0; i < r.t.size(); ++i) {
      os << r.n << ',' << r.t[i] << ",laplacian," << r.lap_scaled[i] << '\n';
      os << r.n << ',' << r.t[i] << ",gradient," << r.grad_scaled[i] << '\n';
    }
  return os.str();
}

}  // namespace bschain
