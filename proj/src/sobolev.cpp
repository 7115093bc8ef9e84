#include "bschain/sobolev.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "bschain/errors.hpp"

namespace bschain {

double kernel_symbol(int n, int z) {
  return 1.0 + 2.0 * static_cast<double>(n) * n * (1.0 - std::cos(2.0 * std::numbers::pi * z / n));
}

KernelKN kernel_kn(int n) {
  if (n < 2) throw InvalidParameter("kernel needs N >= 2");
  Spectrum inv(static_cast<std::size_t>(n));
  for (int z = 0; z < n; ++z) inv[z] = 1.0 / kernel_symbol(n, z);
  KernelKN k{n, idft(inv)};

  const DiscreteField lap = laplacian_1d(k.K);
  for (int x = 0; x < n; ++x) {
    const double lhs = k.K[x] - lap[x];
    k.green_residual = std::max(k.green_residual, std::abs(lhs - (x == 0 ? 1.0 : 0.0)));
    k.even_residual = std::max(k.even_residual, std::abs(k.K[x] - k.K.at(-x)));
  }
  k.gap_value = static_cast<double>(n) * n * (k.K[0] - k.K.at(1));
  if (k.green_residual > 1e-10) throw NumericalError("kernel violates (I - Delta) K = delta");
  if (k.even_residual > 1e-12) throw NumericalError("kernel is not even");
  if (k.gap_value > 0.5 + 1e-12) throw NumericalError("kernel violates N^2 (K(0) - K(1)) <= 1/2");
  return k;
}

double kernel_recursion_residual(const KernelKN& k) {
  const int n = k.n;
  const double inv_n2 = 1.0 / (static_cast<double>(n) * n);
  double partial = 0.0, worst = 0.0;
  for (int x = 1; x <= n / 2; ++x) {
    partial += k.K.at(x);
    const double rhs = inv_n2 * (0.5 * (1.0 - k.K[0]) - partial);
    worst = std::max(worst, std::abs(k.K.at(x) - k.K.at(x + 1) - rhs));
  }
  return worst;
}

namespace {

double spectral_norm_sq(const DiscreteField& f) {
  const int n = f.size();
  const Spectrum fh = dft(f.values());
  double s = 0.0;
  for (int z = 0; z < n; ++z) s += std::norm(fh[z]) / kernel_symbol(n, z);
  return s / (static_cast<double>(n) * n);
}

}  // namespace

double hminus1_norm_sq(const DiscreteField& f, const KernelKN& k) {
  if (f.size() != k.n) throw InvalidParameter("field and kernel sizes differ");
  const double s = spectral_norm_sq(f);
  if (s < -1e-12) throw NumericalError("negative H^{-1} norm");
  return std::max(s, 0.0);
}

double hminus1_norm_sq_direct(const DiscreteField& f, const KernelKN& k) {
  if (f.size() != k.n) throw InvalidParameter("field and kernel sizes differ");
  return kernel_pairing(f, f, k);
}

double kernel_pairing(const DiscreteField& f, const DiscreteField& g, const KernelKN& k) {
  const int n = k.n;
  if (f.size() != n || g.size() != n) throw InvalidParameter("field and kernel sizes differ");
  double s = 0.0;
  for (int x = 0; x < n; ++x) {
    double conv = 0.0;
    for (int y = 0; y < n; ++y) conv += k.K.at(x - y) * g[y];
    s += f[x] * conv;
  }
  return s / n;
}

FourthMoment fourth_moment_functional(const DiscreteField& eta) {
  const int n = eta.size();
  DiscreteField sq(n);
  double m4 = 0.0;
  for (int x = 0; x < n; ++x) {
    sq[x] = eta[x] * eta[x];
    m4 += sq[x] * sq[x];
  }
  return {m4 / n, spectral_norm_sq(sq)};
}

double frame_shift(const ChainParams& p, double t) { return 2.0 * p.alpha_n() * p.n * t; }

double fluctuation_field(const DiscreteField& eta, const DiscreteField& vN, const SpectralProfile& G, double t,
                         const ChainParams& p, double sign) {
  const int n = eta.size();
  if (vN.size() != n) throw InvalidParameter("profile size mismatch");
  const SpectralProfile Gt = G.shifted(sign * frame_shift(p, t));
  double s = 0.0;
  for (int x = 0; x < n; ++x) s += (eta[x] - vN[x]) * Gt(static_cast<double>(x) / n);
  return s / std::sqrt(static_cast<double>(n));
}

double qv_integrand(const DiscreteField& eta, const SpectralProfile& G, double t, const ChainParams& p) {
  const int n = eta.size();
  const DiscreteField g = G.shifted(frame_shift(p, t)).sample(n);
  double s = 0.0;
  for (int x = 0; x < n; ++x) {
    const int xp = x + 1 == n ? 0 : x + 1;
    const double d = eta[xp] - eta[x];
    const double grad = n * (g[xp] - g[x]);
    s += d * d * grad * grad;
  }
  return s / n;
}

namespace {

double trapezoid(std::span<const double> t, std::span<const double> f, std::span<const std::size_t> idx) {
  double s = 0.0;
  for (std::size_t i = 1; i < idx.size(); ++i)
    s += 0.5 * (t[idx[i]] - t[idx[i - 1]]) * (f[idx[i]] + f[idx[i - 1]]);
  return s;
}

}  // namespace

QvSeries qv_estimator(std::span<const double> times, std::span<const double> integrand) {
  if (times.size() != integrand.size()) throw InvalidParameter("times and integrand differ in length");
  QvSeries q;
  q.times.assign(times.begin(), times.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i > 0) acc += 0.5 * (times[i] - times[i - 1]) * (integrand[i] + integrand[i - 1]);
    q.values.push_back(acc);
  }
  if (times.size() >= 3) {
    std::vector<std::size_t> coarse;
    for (std::size_t i = 0; i < times.size(); i += 2) coarse.push_back(i);
    if (coarse.back() != times.size() - 1) coarse.push_back(times.size() - 1);
    const double c = trapezoid(times, integrand, coarse);
    q.refinement_change = std::abs(c - acc) / std::max(std::abs(acc), 1e-300);
    q.resolution_warning = q.refinement_change > 0.01;
  }
  return q;
}

double qv_chi_target(const SpectralProfile& v0, const SpectralProfile& chi0, const SpectralProfile& G,
                     const ChainParams& p, double t, int time_nodes) {
  if (time_nodes < 3) throw InvalidParameter("need at least 3 time nodes");
  if (time_nodes % 2 == 0) ++time_nodes;
  std::vector<double> s(static_cast<std::size_t>(time_nodes));
  for (int i = 0; i < time_nodes; ++i) s[i] = t * i / (time_nodes - 1);
  const auto chi = solve_chi(v0, chi0, p.alpha * std::pow(static_cast<double>(p.n), 1.0 - p.kappa), s);
  const SpectralProfile dG = G.derivative();
  const int points = 512;
  std::vector<double> inner(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const SpectralProfile g = dG.shifted(frame_shift(p, s[i]));
    double acc = 0.0;
    for (int j = 0; j < points; ++j) {
      const double u = static_cast<double>(j) / points;
      const double w = g(u);
      acc += 2.0 * chi[i](u) * w * w;
    }
    inner[i] = acc / points;
  }
  // Composite Simpson.
  const double h = t / (time_nodes - 1);
  double sum = inner.front() + inner.back();
  for (int i = 1; i < time_nodes - 1; ++i) sum += (i % 2 ? 4.0 : 2.0) * inner[i];
  return sum * h / 3.0;
}

SobolevNorm hminusm_norm_sq(const std::map<int, double>& pairings, double m, int cutoff) {
  if (!(m > 0.0)) throw InvalidParameter("m must be > 0");
  if (cutoff < 1) throw InvalidParameter("cutoff must be >= 1");
  SobolevNorm out;
  double big = 0.0;
  for (const auto& [z, v] : pairings) {
    if (std::abs(z) > cutoff) continue;
    out.value += std::pow(sobolev_gamma(z), -m) * v * v;
    big = std::max(big, v * v);
  }
  out.tail_bound = std::pow(sobolev_gamma(cutoff), -m) * big;
  return out;
}

double frame_covariance(const ChainParams& p, double beta, const SpectralProfile& G, double t, double sign) {
  const int n = p.n;
  const DiscreteField g0 = G.sample(n);
  Spectrum gh = dft(g0.values());
  const double a = p.flow_speed();
  for (int k = 0; k < n; ++k) {
    const double th = 2.0 * std::numbers::pi * k / n;
    const double s = std::sin(0.5 * th);
    const Complex sym(-4.0 * static_cast<double>(n) * n * s * s, 2.0 * a * std::sin(th));
    gh[k] *= std::exp(sym * t);
  }
  const DiscreteField evolved = idft(gh);
  const DiscreteField gt = G.shifted(sign * frame_shift(p, t)).sample(n);
  double acc = 0.0;
  for (int x = 0; x < n; ++x) acc += gt[x] * evolved[x];
  return acc / (beta * n);
}

FrameCheck validate_frame_sign(const ChainParams& p, double beta, const SpectralProfile& G, double t) {
  FrameCheck c;
  c.cov0 = frame_covariance(p, beta, G, 0.0, 0.0);
  c.drift_plus = std::abs(frame_covariance(p, beta, G, t, 1.0) - c.cov0);
  c.drift_minus = std::abs(frame_covariance(p, beta, G, t, -1.0) - c.cov0);
  c.drift_none = std::abs(frame_covariance(p, beta, G, t, 0.0) - c.cov0);
  c.sign_ok = c.drift_plus <= c.drift_minus;
  return c;
}

std::string estimator_csv(const std::vector<EstimatorRow>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << "t,quantity,mean,stderr,replicas\n";
  for (const auto& r : rows) os << r.t << ',' << r.quantity << ',' << r.mean << ',' << r.stderr_ << ',' << r.replicas << '\n';
  return os.str();
}

}  // namespace bschain
