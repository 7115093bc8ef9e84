#pragma once

// Discrete H^{-1} kernel and norms, negative Sobolev norms of pairings, and
// the volume fluctuation field observed in the moving frame.

#include <map>
#include <span>
#include <string>
#include <vector>

#include "bschain/chain.hpp"
#include "bschain/continuum.hpp"
#include "bschain/lattice.hpp"

namespace bschain {

/// K(x) = (1/N) sum_z e^{2 pi i z x / N} / a(z), a(z) = 1 + 2N^2 (1 - cos(2 pi z / N)).
struct KernelKN {
  int n = 0;
  DiscreteField K;
  double green_residual = 0.0;   // max_x |(I - Delta^N) K (x) - delta_{0,x}|
  double gap_value = 0.0;        // N^2 (K(0) - K(1))
  double even_residual = 0.0;    // max_x |K(x) - K(-x)|
};

/// a_N(z)
double kernel_symbol(int n, int z);

/// Builds the kernel and checks evenness, the Green identity (1e-10) and the gap bound;
/// a violation throws NumericalError.
KernelKN kernel_kn(int n);

/// max over 1 <= x <= N/2 of |K(x) - K(x+1) - N^{-2}((1 - K(0))/2 - sum_{j=1}^x K(j))|.
double kernel_recursion_residual(const KernelKN& k);

/// (1/N) sum_{x,y} f(x) K(x-y) f(y), evaluated as (1/N^2) sum_z |f^(z)|^2 / a(z).
double hminus1_norm_sq(const DiscreteField& f, const KernelKN& k);
/// Same quantity from the double sum, O(N^2).
double hminus1_norm_sq_direct(const DiscreteField& f, const KernelKN& k);
/// Normalised pairing (1/N) sum_x f(x) (K * g)(x).
double kernel_pairing(const DiscreteField& f, const DiscreteField& g, const KernelKN& k);

struct FourthMoment {
  double m4 = 0.0;    // (1/N) sum eta^4
  double h1sq = 0.0;  // || eta^2 ||^2_{-1,N}
};

FourthMoment fourth_moment_functional(const DiscreteField& eta);

/// Macroscopic displacement of the moving frame after time t: 2 alpha_N N t.
double frame_shift(const ChainParams& p, double t);

/// N^{-1/2} sum_x (eta(x) - vN(x)) G(x/N + sign * frame_shift(t)).
double fluctuation_field(const DiscreteField& eta, const DiscreteField& vN, const SpectralProfile& G, double t,
                         const ChainParams& p, double sign = 1.0);

/// (1/N) sum_x (eta(x+1) - eta(x))^2 (grad^N G_t (x/N))^2 with G_t the frame-shifted test function.
double qv_integrand(const DiscreteField& eta, const SpectralProfile& G, double t, const ChainParams& p);

struct QvSeries {
  std::vector<double> times;
  std::vector<double> values;      // cumulative trapezoid integral
  double refinement_change = 0.0;  // relative change against the half-resolution grid
  bool resolution_warning = false;
};

/// Trapezoid integral of integrand samples; flags a warning when halving the grid moves the
/// final value by more than 1%.
QvSeries qv_estimator(std::span<const double> times, std::span<const double> integrand);

/// int_0^t int 2 chi(s,u) (G'(u + frame_shift(s)))^2 du ds with chi from the continuum solver.
double qv_chi_target(const SpectralProfile& v0, const SpectralProfile& chi0, const SpectralProfile& G,
                     const ChainParams& p, double t, int time_nodes = 2001);

struct SobolevNorm {
  double value = 0.0;
  double tail_bound = 0.0;
};

/// sum_{|z| <= Z} gamma_z^{-m} p_z^2 and the tail estimate gamma_Z^{-m} max p^2.
SobolevNorm hminusm_norm_sq(const std::map<int, double>& pairings, double m, int cutoff);

/// Equilibrium covariance of the field at times 0 and t, (1/(beta N)) sum G_t(x) [e^{tV}](x,y) G(y/N),
/// for a frame shift of sign * frame_shift(t) (sign 0 means no frame).
double frame_covariance(const ChainParams& p, double beta, const SpectralProfile& G, double t, double sign);

struct FrameCheck {
  double cov0 = 0.0;
  double drift_plus = 0.0;   // |cov(+) - cov0|
  double drift_minus = 0.0;  // |cov(-) - cov0|
  double drift_none = 0.0;
  bool sign_ok = false;      // the + frame is the more stationary one
};

FrameCheck validate_frame_sign(const ChainParams& p, double beta, const SpectralProfile& G, double t);

/// CSV with header `t,quantity,mean,stderr,replicas`.
struct EstimatorRow {
  double t;
  std::string quantity;
  double mean;
  double stderr_;
  std::size_t replicas;
};
std::string estimator_csv(const std::vector<EstimatorRow>& rows);

}  // namespace bschain
