#include "bschain/chain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "bschain/errors.hpp"

namespace bschain {

double ChainParams::alpha_n() const { return alpha * std::pow(static_cast<double>(n), -kappa); }

double ChainParams::flow_speed() const { return alpha_n() * static_cast<double>(n) * n; }

void ChainParams::validate() const {
  if (n < 5) throw InvalidParameter("N must be >= 5, got " + std::to_string(n));
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidParameter("alpha must be >= 0");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw InvalidParameter("kappa must be >= 0");
  if (alpha_n() >= 1.0)
    throw InvalidParameter("alpha_N = " + std::to_string(alpha_n()) + " must be < 1");
}

ChainParams make_params(int n, double alpha, double kappa) {
  ChainParams p{n, alpha, kappa};
  p.validate();
  return p;
}

Rng make_rng(std::uint64_t seed, std::uint64_t replica) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(replica), static_cast<std::uint32_t>(replica >> 32)};
  return Rng(seq);
}

ChainState sample_gibbs(const ChainParams& p, double rho, double beta, std::uint64_t seed,
                        std::uint64_t replica) {
  p.validate();
  if (!(beta > 0.0)) throw InvalidParameter("beta must be > 0");
  ChainState s{DiscreteField(p.n), 0.0, make_rng(seed, replica), seed, replica};
  std::normal_distribution<double> normal(rho, 1.0 / std::sqrt(beta));
  for (int x = 0; x < p.n; ++x) s.eta[x] = normal(s.rng);
  return s;
}

ChainState sample_profile_measure(const ChainParams& p, const Profile& v0, const Profile& e0,
                                  std::uint64_t seed, std::uint64_t replica) {
  p.validate();
  std::vector<double> mean(p.n), sd(p.n);
  for (int x = 0; x < p.n; ++x) {
    const double u = static_cast<double>(x) / p.n;
    const double m = v0(u);
    const double chi = e0(u) - m * m;
    if (!(chi > 0.0))
      throw InvalidProfile("non-positive compressibility at x = " + std::to_string(x), x);
    mean[x] = m;
    sd[x] = std::sqrt(chi);
  }
  ChainState s{DiscreteField(p.n), 0.0, make_rng(seed, replica), seed, replica};
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int x = 0; x < p.n; ++x) s.eta[x] = mean[x] + sd[x] * normal(s.rng);
  return s;
}

namespace {

void flow_dft(std::span<double> eta, double s) {
  const int n = static_cast<int>(eta.size());
  Spectrum f = dft(std::span<const double>(eta));
  for (int k = 0; k < n; ++k) {
    const double theta = 2.0 * s * std::sin(2.0 * std::numbers::pi * k / n);
    f[k] *= Complex(std::cos(theta), std::sin(theta));
  }
  const Spectrum back = idft_complex(f);
  for (int x = 0; x < n; ++x) eta[x] = back[x].real();
}

}  // namespace

void flow_inplace(std::span<double> eta, double s) {
  if (s == 0.0) return;
  // ||C|| <= 2, so the series converges geometrically once 2|s| <= 1/2.
  if (2.0 * std::abs(s) > 0.5) {
    flow_dft(eta, s);
    return;
  }
  const int n = static_cast<int>(eta.size());
  thread_local std::vector<double> term, next;
  term.assign(eta.begin(), eta.end());
  next.resize(term.size());
  double scale = 0.0;
  for (double v : eta) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return;
  for (int j = 1; j < 60; ++j) {
    const double c = s / j;
    double m = 0.0;
    next[0] = c * (term[1] - term[n - 1]);
    for (int x = 1; x < n - 1; ++x) next[x] = c * (term[x + 1] - term[x - 1]);
    next[n - 1] = c * (term[0] - term[n - 2]);
    for (int x = 0; x < n; ++x) {
      eta[x] += next[x];
      m = std::max(m, std::abs(next[x]));
    }
    if (m <= 1e-18 * scale) break;
    term.swap(next);
  }
}

ChainState hamiltonian_flow(const ChainState& state, double tau, const ChainParams& p) {
  if (!(tau >= 0.0)) throw InvalidParameter("tau must be >= 0");
  ChainState out = state;
  if (tau > 0.0) flow_dft(out.eta.values(), p.flow_speed() * tau);
  out.t += tau;
  return out;
}

void swap_inplace(std::span<double> eta, int bond) noexcept {
  const int n = static_cast<int>(eta.size());
  const int y = bond + 1 == n ? 0 : bond + 1;
  std::swap(eta[bond], eta[y]);
}

ChainState apply_swap(const ChainState& state, int bond) {
  if (bond < 0 || bond >= state.eta.size()) throw IndexError("bond out of range");
  ChainState out = state;
  swap_inplace(out.eta.values(), bond);
  return out;
}

namespace {

void check_schedule(std::span<const double> schedule, double t0, double t1) {
  double last = t0;
  for (double s : schedule) {
    if (s < last || s > t1 + 1e-12 * std::max(1.0, t1))
      throw InvalidParameter("schedule times must be sorted and lie in [t0, t0 + horizon]");
    last = s;
  }
}

void record(TrajectoryRecord& rec, const SimulateOptions& opts, std::size_t i, double t,
            const DiscreteField& eta) {
  if (!eta.all_finite()) throw SimulationDiverged("non-finite configuration at t = " + std::to_string(t));
  rec.times.push_back(t);
  if (opts.keep_snapshots) rec.snapshots.push_back(eta);
  if (opts.observer) opts.observer(i, t, eta);
}

}  // namespace

TrajectoryRecord simulate(const ChainParams& p, ChainState& state, double horizon,
                          std::span<const double> schedule, const SimulateOptions& opts) {
  p.validate();
  if (!(horizon >= 0.0)) throw InvalidParameter("horizon must be >= 0");
  if (state.eta.size() != p.n) throw InvalidParameter("state size does not match N");
  const double t0 = state.t;
  const double t1 = t0 + horizon;
  check_schedule(schedule, t0, t1);

  TrajectoryRecord rec;
  rec.seed = state.seed;
  rec.replica = state.replica;
  const int n = p.n;
  const double rate = static_cast<double>(n) * n * n;
  const double speed = p.flow_speed();
  std::exponential_distribution<double> wait(rate);
  std::uniform_int_distribution<int> bond(0, n - 1);
  auto eta = state.eta.values();

  double t = t0;
  std::size_t next_obs = 0;
  for (;;) {
    const double te = t + wait(state.rng);
    const double stop = std::min(te, t1);
    while (next_obs < schedule.size() && schedule[next_obs] <= stop) {
      const double ts = std::min(schedule[next_obs], t1);
      flow_inplace(eta, speed * (ts - t));
      t = ts;
      record(rec, opts, next_obs, t, state.eta);
      ++next_obs;
    }
    if (te > t1) {
      flow_inplace(eta, speed * (t1 - t));
      t = t1;
      break;
    }
    flow_inplace(eta, speed * (te - t));
    t = te;
    swap_inplace(eta, bond(state.rng));
    ++rec.events;
  }
  // Schedule points within rounding of t1 that the loop did not reach.
  for (; next_obs < schedule.size(); ++next_obs) record(rec, opts, next_obs, t1, state.eta);
  state.t = t1;
  if (!state.eta.all_finite()) throw SimulationDiverged("non-finite configuration at end of run");
  return rec;
}

TrajectoryRecord simulate_split(const ChainParams& p, ChainState& state, double horizon, double dt,
                                std::span<const double> schedule, const SimulateOptions& opts) {
  p.validate();
  if (!(dt > 0.0)) throw InvalidParameter("dt must be > 0");
  if (!(horizon >= 0.0)) throw InvalidParameter("horizon must be >= 0");
  const int n = p.n;
  const double rate = static_cast<double>(n) * n * n;
  if (dt * rate > 1e9) throw ResourceError("dt * N^3 exceeds 1e9 swaps per step");
  const double t0 = state.t;
  const double t1 = t0 + horizon;
  check_schedule(schedule, t0, t1);

  TrajectoryRecord rec;
  rec.seed = state.seed;
  rec.replica = state.replica;
  const double speed = p.flow_speed();
  std::uniform_int_distribution<int> bond(0, n - 1);
  auto eta = state.eta.values();

  std::vector<double> marks(schedule.begin(), schedule.end());
  if (marks.empty() || marks.back() < t1) marks.push_back(t1);
  double t = t0;
  for (std::size_t i = 0; i < marks.size(); ++i) {
    const double span = marks[i] - t;
    const long steps = span > 0.0 ? static_cast<long>(std::ceil(span / dt - 1e-9)) : 0;
    const double h = steps > 0 ? span / steps : 0.0;
    std::poisson_distribution<long> swaps(h * rate);
    for (long k = 0; k < steps; ++k) {
      flow_inplace(eta, 0.5 * speed * h);
      const long m = swaps(state.rng);
      for (long j = 0; j < m; ++j) swap_inplace(eta, bond(state.rng));
      rec.events += static_cast<std::uint64_t>(m);
      flow_inplace(eta, 0.5 * speed * h);
    }
    t = marks[i];
    if (i < schedule.size()) record(rec, opts, i, t, state.eta);
  }
  state.t = t1;
  if (!state.eta.all_finite()) throw SimulationDiverged("non-finite configuration at end of run");
  return rec;
}

}  // namespace bschain
