#pragma once

// Limiting equations on the continuous torus, solved mode by mode:
//   dv/dt = v'' + 2 alpha v'
//   de/dt = e'' + 2 alpha (v^2)'
//   dchi/dt = chi'' + 2 (v')^2
// with e^{2 pi i k u} modes. The quadratic sources are sums of exponentials in
// time, so their Duhamel integrals are evaluated in closed form.

#include <span>
#include <string>
#include <vector>

#include "bschain/lattice.hpp"

namespace bschain {

/// Real field on T given by coefficients c_k, |k| <= M, of e^{2 pi i k u}.
class SpectralProfile {
 public:
  SpectralProfile() = default;
  explicit SpectralProfile(int m);

  /// a0 + sum_k cos_coeffs[k] cos(2 pi k u) + sum_k sin_coeffs[k-1] sin(2 pi k u).
  static SpectralProfile from_trig(std::span<const double> cos_coeffs, std::span<const double> sin_coeffs,
                                   int m = 0);

  int modes() const noexcept { return m_; }
  Complex coeff(int k) const { return std::abs(k) > m_ ? Complex{} : c_[static_cast<std::size_t>(k + m_)]; }
  Complex& coeff(int k);

  double operator()(double u) const;
  DiscreteField sample(int n) const;
  /// Integral over T (the k = 0 coefficient).
  double mass() const noexcept { return coeff(0).real(); }
  SpectralProfile derivative() const;
  /// u -> f(u + s), applied as a phase rotation.
  SpectralProfile shifted(double s) const;
  /// Largest |k| with a coefficient above `eps` relative to the largest coefficient.
  int support(double eps = 1e-15) const;
  /// Sum of |c_k| over |k| > M/2 relative to the total; the spec's resolution measure.
  double tail_fraction() const;
  /// Projection onto the real basis: <f, h_z>.
  double pairing(int z) const;
  /// L^2(T) norm squared.
  double l2_sq() const;

 private:
  int m_ = 0;
  std::vector<Complex> c_;
};

/// Pointwise product; the result carries the sum of the two cutoffs.
SpectralProfile product(const SpectralProfile& f, const SpectralProfile& g);
/// a f + b g on the larger of the two cutoffs.
SpectralProfile combine(double a, const SpectralProfile& f, double b, const SpectralProfile& g);

struct ContinuumOptions {
  /// Mode cap for results; exceeding it with non-negligible mass throws ResolutionError.
  int max_modes = 256;
  double tail_tol = 1e-10;
};

std::vector<SpectralProfile> solve_volume(const SpectralProfile& v0, double alpha, std::span<const double> times);

/// Energy with source 2 alpha (v^2)', v started from v0.
std::vector<SpectralProfile> solve_energy(const SpectralProfile& e0, const SpectralProfile& v0, double alpha,
                                          std::span<const double> times, const ContinuumOptions& opts = {});

/// Compressibility with source 2 (v')^2. alpha only enters through the drift of v.
std::vector<SpectralProfile> solve_chi(const SpectralProfile& v0, const SpectralProfile& chi0, double alpha,
                                       std::span<const double> times, const ContinuumOptions& opts = {});

/// CSV with header `t,u,value` on the grid u = j / points.
std::string continuum_csv(std::span<const double> times, const std::vector<SpectralProfile>& profiles, int points);

}  // namespace bschain
