#pragma once

// Random walks behind the two-point correlation estimate:
//  * the reflected walk on V_N = {(x,y) in T_N^2 : x != y}, stored as (x, r) with
//    r = y - x mod N in {1..N-1} and flat index x (N-1) + r - 1;
//  * its projection r in {1..N-1}, a symmetric walk at rate 2N^2 reflected at 1 and N-1;
//  * the simple symmetric walk on T_N, evaluated in closed form.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace bschain {

struct WalkDistribution2D {
  int n = 0;
  std::vector<double> p;
  double t = 0.0;

  double at(long x, long y) const;
  /// Throws NumericalError if an entry is below -1e-12 or the mass is off by more than 1e-9.
  void validate() const;
};

struct WalkDistribution1D {
  int n = 0;
  std::vector<double> q;  // q[r - 1], r = 1..N-1
  double t = 0.0;

  double at(int r) const { return q[static_cast<std::size_t>(r - 1)]; }
  void validate() const;
};

inline std::size_t walk_index(int n, int x, int r) {
  return static_cast<std::size_t>(x) * (n - 1) + static_cast<std::size_t>(r - 1);
}
/// Flat index of (x, y); x == y (mod N) throws IndexError.
std::size_t walk_index_xy(int n, long x, long y);

WalkDistribution2D delta_2d(int n, long x, long y);
WalkDistribution2D uniform_2d(int n);
WalkDistribution1D delta_1d(int n, int r);

/// Kolmogorov forward derivative of the 2D law. alpha_n outside [0, 1) throws InvalidParameter.
std::vector<double> generator_2d(std::span<const double> p, int n, double alpha_n);
/// Forward derivative of the projected 1D law.
std::vector<double> generator_1d(std::span<const double> q, int n);

struct WalkSolveOptions {
  double tol = 1e-11;
  /// Zero selects 0.2 / (4 N^2 (1 + alpha_N)).
  double dt_max = 0.0;
  double dt_min = 1e-10;
};

/// Laws at the absolute schedule times (sorted, within [p0.t, p0.t + horizon]).
std::vector<WalkDistribution2D> forward_solve_2d(const WalkDistribution2D& p0, double alpha_n,
                                                 double horizon, std::span<const double> schedule,
                                                 const WalkSolveOptions& opts = {});
std::vector<WalkDistribution1D> forward_solve_1d(const WalkDistribution1D& q0, double horizon,
                                                 std::span<const double> schedule,
                                                 const WalkSolveOptions& opts = {});

WalkDistribution1D project_to_1d(const WalkDistribution2D& p);

/// Expected time in {1, N-1} over [0, T] for the projected walk started at r0.
/// Integrated as an extra component of the RK4 system.
double local_time(int n, int r0, double horizon, const WalkSolveOptions& opts = {});

/// Transition probabilities of the reflected walk from every start state on the grid j*h, j = 0..steps.
struct WalkKernel2D {
  int n = 0;
  double h = 0.0;
  std::size_t steps = 0;
  std::vector<std::vector<double>> p;  // p[start * (steps + 1) + j] is the law at time j*h

  const std::vector<double>& law(std::size_t start, std::size_t j) const { return p[start * (steps + 1) + j]; }
};

WalkKernel2D transition_kernel_2d(int n, double alpha_n, double h, std::size_t steps,
                                  const WalkSolveOptions& opts = {});

/// One Monte Carlo path of the reflected walk; returns the flat index at time T.
std::size_t sample_walk_2d(int n, double alpha_n, std::size_t start, double horizon, std::mt19937_64& rng);

/// p_t^x(y) = (1/N) sum_k exp(-Lambda_k t - 2 pi i k (x - y)/N).
double srw_transition(long x, long y, double t, int n);
/// p_t^0(d) for d = 0..N-1.
std::vector<double> srw_row(int n, double t);

struct SrwBoundReport {
  int n = 0;
  std::vector<double> t;
  std::vector<double> lap_scaled;   // N t^{3/2} max |Delta^N p_t|
  std::vector<double> grad_scaled;  // N t max |grad^N p_t|
  double sup_lap = 0.0;
  double sup_grad = 0.0;
};

SrwBoundReport srw_derivative_bounds(int n, std::span<const double> t_grid);

/// CSV with header `N,t,quantity,value`.
std::string bound_report_csv(const std::vector<SrwBoundReport>& reports);

}  // namespace bschain
