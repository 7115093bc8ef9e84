#pragma once

// Closed first/second moment dynamics of the chain.
//
// Two independent right-hand sides are provided: the linear system on (v, S)
// with S(x,y) = E[eta(x) eta(y)], and the (v, e, phi) system built from the
// reflected two-dimensional walk operator plus the source g. The first is the
// reference; the second exists for cross-validation.

#include <span>
#include <string>
#include <vector>

#include "bschain/chain.hpp"
#include "bschain/lattice.hpp"

namespace bschain {

struct WalkKernel2D;

struct MomentState {
  DiscreteField v;
  std::vector<double> S;  // row-major N x N, symmetric
  double t = 0.0;

  int n() const noexcept { return v.size(); }
  double s(int x, int y) const noexcept { return S[static_cast<std::size_t>(x) * n() + y]; }
  double& s(int x, int y) noexcept { return S[static_cast<std::size_t>(x) * n() + y]; }
  double e(int x) const noexcept { return s(x, x); }
  DiscreteField energy() const;
  /// S(x,y) - v(x) v(y); x == y (mod N) throws IndexError.
  double phi(long x, long y) const;
  /// e - v^2
  DiscreteField compressibility() const;

  /// Product measure with the given mean and energy profiles: S = v v^T off the diagonal, e on it.
  static MomentState from_profiles(const DiscreteField& v, const DiscreteField& e);
  static MomentState equilibrium(int n, double rho, double beta);
};

/// Two-point function on the off-diagonal set {(x,y): x != y mod N}.
class CorrelationField {
 public:
  CorrelationField() = default;
  explicit CorrelationField(int n, double fill = 0.0);

  int n() const noexcept { return n_; }
  /// Periodic indices; the diagonal is not part of the domain.
  double at(long x, long y) const;
  double& at(long x, long y);
  std::span<const double> raw() const noexcept { return data_; }
  std::span<double> raw() noexcept { return data_; }
  double max_abs() const noexcept;

 private:
  std::size_t index(long x, long y) const;
  int n_ = 0;
  std::vector<double> data_;  // N x N, diagonal kept at zero
};

CorrelationField correlation(const MomentState& m);

/// Delta^N v + 2 alpha_N N grad_centered(v).
DiscreteField volume_rhs(const DiscreteField& v, const ChainParams& p);

/// d/dt S as a row-major N x N array. N < 5 throws StencilWrap.
std::vector<double> second_moment_rhs(const MomentState& m, const ChainParams& p);

/// Packed (v, S) right-hand side used by the integrator.
void moment_system_rhs(std::span<const double> y, std::span<double> dy, const ChainParams& p);

/// g(x) = alpha_N N^2 (chi(x+1) - chi(x)) - (grad_forward v (x))^2 with chi = e - v^2.
DiscreteField g_source(const DiscreteField& v, const DiscreteField& e, const ChainParams& p);
DiscreteField g_source(const MomentState& m, const ChainParams& p);

/// Reflected walk operator applied to phi, plus g on the two near-diagonal lines.
CorrelationField correlation_rhs(const CorrelationField& phi, const DiscreteField& g,
                                 const ChainParams& p);

/// Delta^N e + 2 alpha_N N grad_forward(S(x-1,x)), with S(x-1,x) = phi(x-1,x) + v(x-1) v(x).
DiscreteField energy_rhs(const DiscreteField& v, const DiscreteField& e, const CorrelationField& phi,
                         const ChainParams& p);

enum class Formulation { SecondMoment, EnergyCorrelation };

struct EvolveOptions {
  double tol = 1e-9;
  /// Zero selects 0.2 / (4 N^2 (1 + alpha_N)).
  double dt_max = 0.0;
  double dt_min = 1e-9;
  Formulation formulation = Formulation::SecondMoment;
};

struct MomentTrajectory {
  std::vector<MomentState> snapshots;
  double dt = 0.0;
  double achieved_error = 0.0;
};

double default_moment_dt(const ChainParams& p);

/// Snapshots at absolute times (sorted, >= initial.t, last one <= initial.t + horizon).
/// An empty `times` returns the single snapshot at initial.t + horizon.
MomentTrajectory evolve(const MomentState& initial, const ChainParams& p, double horizon,
                        std::span<const double> times = {}, const EvolveOptions& opts = {});

/// Duhamel representation of phi at time t = h * (g_path.size() - 1):
/// walk expectation of phi0 plus the trapezoid-in-s integral of the walk-averaged source,
/// where g_path[j] is g at time j*h. The kernel must carry every start state on the same grid.
CorrelationField duhamel_reconstruct(const CorrelationField& phi0, const std::vector<DiscreteField>& g_path,
                                     double h, const WalkKernel2D& kernel, const ChainParams& p);

/// CSV with header `t,x,value`.
std::string profile_csv(const std::vector<double>& times, const std::vector<DiscreteField>& fields);
/// CSV with header `t,x,y,value` over off-diagonal pairs.
std::string correlation_csv(const std::vector<MomentState>& snapshots);

}  // namespace bschain
