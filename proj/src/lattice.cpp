#include "bschain/lattice.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "bschain/errors.hpp"

namespace bschain {

DiscreteField::DiscreteField(int n, double fill) {
  if (n < 2) throw InvalidParameter("DiscreteField: size must be >= 2");
  values_.assign(static_cast<std::size_t>(n), fill);
}

DiscreteField::DiscreteField(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) throw InvalidParameter("DiscreteField: size must be >= 2");
  if (!all_finite()) throw InvalidParameter("DiscreteField: non-finite value");
}

DiscreteField::DiscreteField(std::initializer_list<double> values)
    : DiscreteField(std::vector<double>(values)) {}

double DiscreteField::sum() const noexcept {
  double s = 0.0;
  for (double v : values_) s += v;
  return s;
}

double DiscreteField::sum_squares() const noexcept {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return s;
}

double DiscreteField::max_abs() const noexcept {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool DiscreteField::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

DiscreteField grad_forward(const DiscreteField& f) {
  const int n = f.size();
  const Torus t{n};
  DiscreteField out(n);
  for (int x = 0; x < n; ++x) out[x] = n * (f[t.next(x)] - f[x]);
  return out;
}

DiscreteField grad_backward(const DiscreteField& f) {
  const int n = f.size();
  const Torus t{n};
  DiscreteField out(n);
  for (int x = 0; x < n; ++x) out[x] = n * (f[x] - f[t.prev(x)]);
  return out;
}

DiscreteField grad_centered(const DiscreteField& f) {
  const int n = f.size();
  const Torus t{n};
  DiscreteField out(n);
  for (int x = 0; x < n; ++x) out[x] = 0.5 * n * (f[t.next(x)] - f[t.prev(x)]);
  return out;
}

DiscreteField laplacian_1d(const DiscreteField& f) {
  const int n = f.size();
  const Torus t{n};
  const double n2 = static_cast<double>(n) * n;
  DiscreteField out(n);
  for (int x = 0; x < n; ++x) out[x] = n2 * (f[t.next(x)] + f[t.prev(x)] - 2.0 * f[x]);
  return out;
}

double laplacian_symbol(int n, int k) {
  const double s = std::sin(std::numbers::pi * k / n);
  return 4.0 * static_cast<double>(n) * n * s * s;
}

namespace {

// FFTW planning is not thread-safe; plans are created once per size under a lock
// and executed through the new-array interface, which is.
struct PlanPair {
  fftw_plan forward;
  fftw_plan backward;
};

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.backward);
    }
  }

  PlanPair get(int n) {
    std::lock_guard lock(mu_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    auto* in = fftw_alloc_complex(static_cast<std::size_t>(n));
    auto* out = fftw_alloc_complex(static_cast<std::size_t>(n));
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    PlanPair p{fftw_plan_dft_1d(n, in, out, FFTW_FORWARD, flags),
               fftw_plan_dft_1d(n, in, out, FFTW_BACKWARD, flags)};
    fftw_free(in);
    fftw_free(out);
    if (!p.forward || !p.backward) throw DependencyError("fftw planning failed");
    plans_.emplace(n, p);
    return p;
  }

 private:
  std::mutex mu_;
  std::map<int, PlanPair> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

Spectrum transform(std::span<const Complex> in, bool forward) {
  const int n = static_cast<int>(in.size());
  Spectrum src(in.begin(), in.end());
  Spectrum out(in.size());
  const PlanPair p = cache().get(n);
  fftw_execute_dft(forward ? p.forward : p.backward, reinterpret_cast<fftw_complex*>(src.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

}  // namespace

Spectrum dft(std::span<const Complex> f) { return transform(f, true); }

Spectrum dft(std::span<const double> f) {
  Spectrum c(f.begin(), f.end());
  return transform(c, true);
}

Spectrum idft_complex(std::span<const Complex> spectrum) {
  Spectrum out = transform(spectrum, false);
  const double inv = 1.0 / static_cast<double>(spectrum.size());
  for (auto& c : out) c *= inv;
  return out;
}

DiscreteField idft(std::span<const Complex> spectrum) {
  const Spectrum c = idft_complex(spectrum);
  std::vector<double> re(c.size());
  std::transform(c.begin(), c.end(), re.begin(), [](Complex z) { return z.real(); });
  return DiscreteField(std::move(re));
}

double fourier_basis(int z, double u) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (z == 0) return 1.0;
  if (z > 0) return std::numbers::sqrt2 * std::cos(two_pi * z * u);
  return std::numbers::sqrt2 * std::sin(two_pi * z * u);
}

double sobolev_gamma(int z) {
  return 1.0 + 4.0 * std::numbers::pi * std::numbers::pi * static_cast<double>(z) * z;
}

double riemann_inner(const DiscreteField& f, const DiscreteField& g) {
  if (f.size() != g.size()) throw InvalidParameter("riemann_inner: size mismatch");
  double s = 0.0;
  for (int x = 0; x < f.size(); ++x) s += f[x] * g[x];
  return s / f.size();
}

}  // namespace bschain
