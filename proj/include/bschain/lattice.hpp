#pragma once

// Discrete torus T_N = {0, ..., N-1}: fields, difference operators, Fourier utilities.

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace bschain {

using Complex = std::complex<double>;
using Spectrum = std::vector<Complex>;

/// Periodic neighbour arithmetic without boundary branches.
struct Torus {
  int n;

  constexpr int next(int x) const noexcept { return x + 1 - n * static_cast<int>(x + 1 == n); }
  constexpr int prev(int x) const noexcept { return x - 1 + n * static_cast<int>(x == 0); }
  /// Reduces any integer (possibly negative) into [0, n).
  constexpr int wrap(long x) const noexcept {
    long r = x % n;
    return static_cast<int>(r + n * static_cast<long>(r < 0));
  }
};

/// Real field on the discrete torus. Values are finite; indices are taken mod N.
class DiscreteField {
 public:
  DiscreteField() = default;
  explicit DiscreteField(int n, double fill = 0.0);
  explicit DiscreteField(std::vector<double> values);
  DiscreteField(std::initializer_list<double> values);

  int size() const noexcept { return static_cast<int>(values_.size()); }
  Torus torus() const noexcept { return Torus{size()}; }

  double& operator[](int x) noexcept { return values_[static_cast<std::size_t>(x)]; }
  double operator[](int x) const noexcept { return values_[static_cast<std::size_t>(x)]; }
  /// Periodic access for any integer index.
  double at(long x) const noexcept { return values_[static_cast<std::size_t>(torus().wrap(x))]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  const std::vector<double>& data() const noexcept { return values_; }

  double sum() const noexcept;
  double sum_squares() const noexcept;
  double max_abs() const noexcept;
  bool all_finite() const noexcept;

  friend bool operator==(const DiscreteField&, const DiscreteField&) = default;

 private:
  std::vector<double> values_;
};

/// N (f(x+1) - f(x)).
DiscreteField grad_forward(const DiscreteField& f);
/// N (f(x) - f(x-1)).
DiscreteField grad_backward(const DiscreteField& f);
/// (N/2) (f(x+1) - f(x-1)).
DiscreteField grad_centered(const DiscreteField& f);
/// N^2 (f(x+1) + f(x-1) - 2 f(x)).
DiscreteField laplacian_1d(const DiscreteField& f);

/// Symbol of -laplacian_1d on mode k: 4 N^2 sin^2(pi k / N).
double laplacian_symbol(int n, int k);

/// Forward transform f^(k) = sum_x f(x) exp(-2 pi i k x / N). Any N >= 1.
Spectrum dft(std::span<const double> f);
Spectrum dft(std::span<const Complex> f);
/// Inverse of `dft`, including the 1/N factor.
Spectrum idft_complex(std::span<const Complex> spectrum);
/// Inverse transform keeping the real part (input assumed conjugate-symmetric).
DiscreteField idft(std::span<const Complex> spectrum);

/// Orthonormal basis of L^2(T): 1, sqrt2 cos(2 pi z u) for z > 0, sqrt2 sin(2 pi z u) for z < 0 (z kept signed).
double fourier_basis(int z, double u);
/// Eigenvalue of (1 - Laplacian) on h_z: 1 + 4 pi^2 z^2.
double sobolev_gamma(int z);

/// Samples g(x/N) on the grid.
template <typename F>
DiscreteField sample(int n, F&& g) {
  DiscreteField out(n);
  for (int x = 0; x < n; ++x) out[x] = g(static_cast<double>(x) / n);
  return out;
}

/// Riemann sum (1/N) sum_x f(x) g(x).
double riemann_inner(const DiscreteField& f, const DiscreteField& g);

}  // namespace bschain
