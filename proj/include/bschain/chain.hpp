#pragma once

// Microscopic simulation: exchange noise at rate N^2 per bond plus the
// harmonic Hamiltonian flow accelerated by alpha_N N^2.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "bschain/lattice.hpp"

namespace bschain {

struct ChainParams {
  int n = 0;
  double alpha = 0.0;
  double kappa = 0.0;

  /// alpha N^{-kappa}
  double alpha_n() const;
  /// Speed of the Hamiltonian part in macroscopic time, alpha_N N^2.
  double flow_speed() const;
  /// Throws InvalidParameter unless N >= 5, alpha >= 0, kappa >= 0 and alpha_N < 1.
  void validate() const;
};

/// Validated constructor.
ChainParams make_params(int n, double alpha, double kappa);

using Rng = std::mt19937_64;

/// Independent stream for (master seed, replica index).
Rng make_rng(std::uint64_t seed, std::uint64_t replica = 0);

struct ChainState {
  DiscreteField eta;
  double t = 0.0;
  Rng rng;
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
};

ChainState sample_gibbs(const ChainParams& p, double rho, double beta, std::uint64_t seed,
                        std::uint64_t replica = 0);

using Profile = std::function<double(double)>;

/// Independent Gaussians with mean v0(x/N) and variance e0(x/N) - v0(x/N)^2.
ChainState sample_profile_measure(const ChainParams& p, const Profile& v0, const Profile& e0,
                                  std::uint64_t seed, std::uint64_t replica = 0);

/// Exact flow of d eta/dt = alpha_N N^2 (eta(x+1) - eta(x-1)) over tau, via the DFT.
ChainState hamiltonian_flow(const ChainState& state, double tau, const ChainParams& p);

/// In-place flow by the skew circulant exp(s C), C eta(x) = eta(x+1) - eta(x-1).
/// Small |s| uses the truncated exponential series on the stencil, larger |s| the DFT.
void flow_inplace(std::span<double> eta, double s);

ChainState apply_swap(const ChainState& state, int bond);
void swap_inplace(std::span<double> eta, int bond) noexcept;

/// Called at each observation time with its index in the schedule.
using Observer = std::function<void(std::size_t index, double t, const DiscreteField& eta)>;

struct SimulateOptions {
  bool keep_snapshots = true;
  Observer observer;
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<DiscreteField> snapshots;
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
  std::uint64_t events = 0;
};

/// Event-driven exact scheme. `state` advances to state.t + horizon in place.
/// Schedule times are absolute, sorted, inside [state.t, state.t + horizon].
TrajectoryRecord simulate(const ChainParams& p, ChainState& state, double horizon,
                          std::span<const double> schedule, const SimulateOptions& opts = {});

/// Strang splitting: flow dt/2, Poisson(dt N^3) uniform swaps, flow dt/2.
/// Steps are shortened so every schedule time is hit exactly.
TrajectoryRecord simulate_split(const ChainParams& p, ChainState& state, double horizon, double dt,
                                std::span<const double> schedule, const SimulateOptions& opts = {});

}  // namespace bschain
