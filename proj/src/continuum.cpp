#include "bschain/continuum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

#include "bschain/errors.hpp"

namespace bschain {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr Complex kI{0.0, 1.0};

Complex expm1c(Complex z) {
  const double s = std::sin(0.5 * z.imag());
  return {std::expm1(z.real()) * std::cos(z.imag()) - 2.0 * s * s, std::exp(z.real()) * std::sin(z.imag())};
}

// (e^z - 1) / z
Complex phi1(Complex z) {
  if (std::abs(z) < 1e-5) return 1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0));
  return expm1c(z) / z;
}

// int_0^t e^{mu (t - s)} e^{b s} ds, choosing the factorisation that never overflows.
Complex duhamel(Complex b, Complex mu, double t) {
  const Complex c = b - mu;
  if (c.real() <= 0.0) return std::exp(mu * t) * t * phi1(c * t);
  return std::exp(b * t) * t * phi1(-c * t);
}

Complex volume_rate(int k, double alpha) {
  return Complex(-4.0 * kPi * kPi * k * k, 4.0 * kPi * alpha * k);
}

double heat_rate(int k) { return -4.0 * kPi * kPi * static_cast<double>(k) * k; }

struct Term {
  int j, l;
  Complex weight;  // coefficient product, including derivative factors
};

// Solves d f_k/dt = mu_k f_k + sum over pairs (j, l), j + l = k, of src_k * w_jl e^{(lambda_j + lambda_l) t}.
template <typename SourceFactor>
std::vector<SpectralProfile> quadratic_solve(const SpectralProfile& f0, const std::vector<Term>& terms, double alpha,
                                             SourceFactor&& factor, std::span<const double> times,
                                             const ContinuumOptions& opts) {
  int needed = f0.support();
  for (const auto& t : terms) needed = std::max(needed, std::abs(t.j + t.l));
  const int m = std::max(opts.max_modes, 2);
  std::vector<SpectralProfile> out;
  for (double t : times) {
    SpectralProfile f(m);
    double total = 0.0, dropped = 0.0;
    std::vector<Complex> acc(static_cast<std::size_t>(2 * needed + 1));
    for (int k = -needed; k <= needed; ++k) acc[static_cast<std::size_t>(k + needed)] = f0.coeff(k) * std::exp(heat_rate(k) * t);
    for (const auto& term : terms) {
      const int k = term.j + term.l;
      const Complex b = volume_rate(term.j, alpha) + volume_rate(term.l, alpha);
      acc[static_cast<std::size_t>(k + needed)] += factor(k) * term.weight * duhamel(b, heat_rate(k), t);
    }
    for (int k = -needed; k <= needed; ++k) {
      const Complex c = acc[static_cast<std::size_t>(k + needed)];
      total += std::abs(c);
      if (std::abs(k) > m / 2) dropped += std::abs(c);
      else f.coeff(k) = c;
    }
    if (dropped > opts.tail_tol * std::max(total, 1e-300))
      throw ResolutionError("source needs modes beyond M/2 = " + std::to_string(m / 2) + "; increase max_modes");
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<int> active_modes(const SpectralProfile& v) {
  std::vector<int> ks;
  const int s = v.support();
  for (int k = -s; k <= s; ++k)
    if (v.coeff(k) != Complex{}) ks.push_back(k);
  return ks;
}

}  // namespace

SpectralProfile::SpectralProfile(int m) : m_(m), c_(static_cast<std::size_t>(2 * m + 1)) {
  if (m < 0) throw InvalidParameter("mode cutoff must be >= 0");
}

Complex& SpectralProfile::coeff(int k) {
  if (std::abs(k) > m_) throw IndexError("mode outside the cutoff");
  return c_[static_cast<std::size_t>(k + m_)];
}

SpectralProfile SpectralProfile::from_trig(std::span<const double> cos_coeffs, std::span<const double> sin_coeffs,
                                           int m) {
  const int need = static_cast<int>(std::max(cos_coeffs.empty() ? 0 : cos_coeffs.size() - 1, sin_coeffs.size()));
  SpectralProfile f(std::max(m, std::max(need, 2)));
  for (std::size_t k = 0; k < cos_coeffs.size(); ++k) {
    if (!std::isfinite(cos_coeffs[k])) throw InvalidParameter("non-finite coefficient");
    const int kk = static_cast<int>(k);
    if (kk == 0) {
      f.coeff(0) += cos_coeffs[0];
    } else {
      f.coeff(kk) += 0.5 * cos_coeffs[k];
      f.coeff(-kk) += 0.5 * cos_coeffs[k];
    }
  }
  for (std::size_t i = 0; i < sin_coeffs.size(); ++i) {
    if (!std::isfinite(sin_coeffs[i])) throw InvalidParameter("non-finite coefficient");
    const int kk = static_cast<int>(i + 1);
    f.coeff(kk) += -0.5 * kI * sin_coeffs[i];
    f.coeff(-kk) += 0.5 * kI * sin_coeffs[i];
  }
  return f;
}

double SpectralProfile::operator()(double u) const {
  double s = c_.empty() ? 0.0 : coeff(0).real();
  for (int k = 1; k <= m_; ++k) {
    const Complex c = coeff(k);
    if (c == Complex{}) continue;
    // Conjugate symmetry: c_k e^{i theta} + c_{-k} e^{-i theta} = 2 Re(c_k e^{i theta}).
    const double th = 2.0 * kPi * k * u;
    s += 2.0 * (c.real() * std::cos(th) - c.imag() * std::sin(th));
  }
  return s;
}

DiscreteField SpectralProfile::sample(int n) const {
  DiscreteField out(n);
  for (int x = 0; x < n; ++x) out[x] = (*this)(static_cast<double>(x) / n);
  return out;
}

SpectralProfile SpectralProfile::derivative() const {
  SpectralProfile d(m_);
  for (int k = -m_; k <= m_; ++k) d.coeff(k) = 2.0 * kPi * k * kI * coeff(k);
  return d;
}

SpectralProfile SpectralProfile::shifted(double s) const {
  SpectralProfile d(m_);
  for (int k = -m_; k <= m_; ++k) {
    const double th = 2.0 * kPi * k * s;
    d.coeff(k) = coeff(k) * Complex(std::cos(th), std::sin(th));
  }
  return d;
}

int SpectralProfile::support(double eps) const {
  double big = 0.0;
  for (const auto& c : c_) big = std::max(big, std::abs(c));
  if (big == 0.0) return 0;
  for (int k = m_; k > 0; --k)
    if (std::abs(coeff(k)) > eps * big || std::abs(coeff(-k)) > eps * big) return k;
  return 0;
}

double SpectralProfile::tail_fraction() const {
  double total = 0.0, tail = 0.0;
  for (int k = -m_; k <= m_; ++k) {
    total += std::abs(coeff(k));
    if (std::abs(k) > m_ / 2) tail += std::abs(coeff(k));
  }
  return total > 0.0 ? tail / total : 0.0;
}

double SpectralProfile::pairing(int z) const {
  if (z == 0) return coeff(0).real();
  if (z > 0) return std::numbers::sqrt2 * 0.5 * (coeff(z) + coeff(-z)).real();
  return std::numbers::sqrt2 * coeff(-z).imag();
}

double SpectralProfile::l2_sq() const {
  double s = 0.0;
  for (const auto& c : c_) s += std::norm(c);
  return s;
}

SpectralProfile product(const SpectralProfile& f, const SpectralProfile& g) {
  SpectralProfile out(f.modes() + g.modes());
  for (int j = -f.modes(); j <= f.modes(); ++j) {
    const Complex a = f.coeff(j);
    if (a == Complex{}) continue;
    for (int l = -g.modes(); l <= g.modes(); ++l) out.coeff(j + l) += a * g.coeff(l);
  }
  return out;
}

SpectralProfile combine(double a, const SpectralProfile& f, double b, const SpectralProfile& g) {
  const int m = std::max(f.modes(), g.modes());
  SpectralProfile out(m);
  for (int k = -m; k <= m; ++k) out.coeff(k) = a * std::as_const(f).coeff(k) + b * std::as_const(g).coeff(k);
  return out;
}

std::vector<SpectralProfile> solve_volume(const SpectralProfile& v0, double alpha, std::span<const double> times) {
  if (v0.modes() < 2) throw InvalidParameter("mode cutoff must be >= 2");
  std::vector<SpectralProfile> out;
  for (double t : times) {
    SpectralProfile v(v0.modes());
    for (int k = -v0.modes(); k <= v0.modes(); ++k) v.coeff(k) = v0.coeff(k) * std::exp(volume_rate(k, alpha) * t);
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<SpectralProfile> solve_energy(const SpectralProfile& e0, const SpectralProfile& v0, double alpha,
                                          std::span<const double> times, const ContinuumOptions& opts) {
  std::vector<Term> terms;
  const auto ks = active_modes(v0);
  for (int j : ks)
    for (int l : ks) terms.push_back({j, l, v0.coeff(j) * v0.coeff(l)});
  auto factor = [&](int k) { return 2.0 * alpha * 2.0 * kPi * k * kI; };
  return quadratic_solve(e0, terms, alpha, factor, times, opts);
}

std::vector<SpectralProfile> solve_chi(const SpectralProfile& v0, const SpectralProfile& chi0, double alpha,
                                       std::span<const double> times, const ContinuumOptions& opts) {
  std::vector<Term> terms;
  const auto ks = active_modes(v0);
  for (int j : ks)
    for (int l : ks)
      terms.push_back({j, l, (2.0 * kPi * j * kI) * (2.0 * kPi * l * kI) * v0.coeff(j) * v0.coeff(l)});
  auto factor = [](int) { return Complex(2.0, 0.0); };
  return quadratic_solve(chi0, terms, alpha, factor, times, opts);
}

std::string continuum_csv(std::span<const double> times, const std::vector<SpectralProfile>& profiles, int points) {
  std::ostringstream os;
  os.precision(17);
  os << "t,u,value\n";
  for (std::size_t i = 0; i < times.size(); ++i)
    for (int j = 0; j < points; ++j) {
      const double u = static_cast<double>(j) / points;
      os << times[i] << ',' << u << ',' << profiles[i](u) << '\n';
    }
  return os.str();
}

}  // namespace bschain
