#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bschain/errors.hpp"
#include "bschain/moments.hpp"
#include "bschain/rw.hpp"
#include "oracles.hpp"

using namespace bschain;

namespace {

/// Random admissible state: S = C C^T / n + v v^T with v, C random.
MomentState random_state(int n, std::uint64_t seed) {
  const auto v = oracle::random_vector(n, seed);
  const auto c = oracle::random_vector(static_cast<std::size_t>(n) * n, seed + 1);
  MomentState m{DiscreteField(v), std::vector<double>(static_cast<std::size_t>(n) * n), 0.0};
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += c[x * n + k] * c[y * n + k];
      m.s(x, y) = s / n + v[x] * v[y];
    }
  return m;
}

Eigen::MatrixXd as_matrix(const std::vector<double>& s, int n) {
  Eigen::MatrixXd m(n, n);
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) m(x, y) = s[static_cast<std::size_t>(x) * n + y];
  return m;
}

double max_abs_diff_helper(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

MomentState example_state(int n) {
  const auto v = sample(n, [](double u) { return 0.5 * std::cos(2 * std::numbers::pi * u) + 0.2; });
  const auto e = sample(n, [](double u) { return 1.0 + 0.3 * std::sin(2 * std::numbers::pi * u); });
  return MomentState::from_profiles(v, e);
}

}  // namespace

TEST_CASE("state accessors") {
  const auto m = MomentState::equilibrium(6, 0.5, 2.0);
  CHECK(m.e(2) == doctest::Approx(0.75));
  CHECK(m.phi(1, 3) == doctest::Approx(0.0));
  CHECK_THROWS_AS(m.phi(2, 8), IndexError);
  CorrelationField c(6);
  CHECK_THROWS_AS(c.at(1, 7), IndexError);
  c.at(1, 8) = 2.0;
  CHECK(c.at(7, 2) == 2.0);
}

TEST_CASE("volume_rhs") {
  const auto p = make_params(16, 0.5, 1.0);
  CHECK(volume_rhs(DiscreteField(16, 1.3), p).max_abs() < 1e-12);
  const auto p0 = make_params(16, 0.0, 1.0);
  const auto h1 = sample(16, [](double u) { return fourier_basis(1, u); });
  const auto d = volume_rhs(h1, p0);
  for (int x = 0; x < 16; ++x) CHECK(d[x] == doctest::Approx(-laplacian_symbol(16, 1) * h1[x]).scale(1.0));
  const auto r = volume_rhs(oracle::random_field(16, 4), p);
  CHECK(std::abs(r.sum()) < 1e-10);
}

TEST_CASE("second_moment_rhs") {
  const auto p = make_params(6, 0.5, 1.0);
  SUBCASE("equilibrium is stationary") {
    const auto eq = MomentState::equilibrium(6, 0.7, 1.5);
    for (double d : second_moment_rhs(eq, p)) CHECK(std::abs(d) < 1e-11);
    CHECK(volume_rhs(eq.v, p).max_abs() < 1e-12);
  }
  SUBCASE("trace is conserved") {
    const auto d = second_moment_rhs(random_state(6, 3), p);
    double tr = 0.0;
    for (int x = 0; x < 6; ++x) tr += d[x * 6 + x];
    CHECK(std::abs(tr) < 1e-10);
  }
  SUBCASE("brute-force generator on quadratic polynomials") {
    for (double kappa : {0.0, 1.0}) {
      const auto pk = make_params(6, 0.5, kappa);
      const oracle::QuadraticGenerator gen(pk);
      for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto m = random_state(6, seed);
        const Eigen::MatrixXd ref = gen.second_moment_derivative(as_matrix(m.S, 6));
        const Eigen::MatrixXd got = as_matrix(second_moment_rhs(m, pk), 6);
        CHECK((ref - got).cwiseAbs().maxCoeff() < 1e-9 * (1 + ref.cwiseAbs().maxCoeff()));
        const Eigen::VectorXd vref = gen.mean_derivative(Eigen::Map<const Eigen::VectorXd>(m.v.data().data(), 6));
        const auto vd = volume_rhs(m.v, pk);
        for (int x = 0; x < 6; ++x) CHECK(vd[x] == doctest::Approx(vref(x)).epsilon(1e-10).scale(1.0));
      }
    }
  }
  SUBCASE("N < 5 is rejected") {
    MomentState small{DiscreteField(4), std::vector<double>(16), 0.0};
    CHECK_THROWS_AS(second_moment_rhs(small, ChainParams{4, 0.5, 1.0}), StencilWrap);
  }
}

TEST_CASE("g_source") {
  const auto p = make_params(8, 0.5, 1.0);
  CHECK(g_source(DiscreteField(8, 0.3), DiscreteField(8, 1.2), p).max_abs() < 1e-12);
  CHECK(g_source(MomentState::equilibrium(8, 0.3, 2.0), p).max_abs() < 1e-12);
  DiscreteField e(8);
  for (int x = 0; x < 8; ++x) e[x] = x % 2 ? 2.0 : 1.0;
  const auto g = g_source(DiscreteField(8), e, p);
  for (int x = 0; x < 8; ++x) CHECK(g[x] == doctest::Approx(0.5 * 8 * (e.at(x + 1) - e[x])));
}

TEST_CASE("correlation_rhs") {
  const int n = 7;
  const auto p = make_params(n, 0.5, 1.0);
  SUBCASE("zero field with flat profiles") {
    const auto g = g_source(DiscreteField(n, 0.4), DiscreteField(n, 1.0), p);
    CHECK(correlation_rhs(CorrelationField(n), g, p).max_abs() == 0.0);
  }
  SUBCASE("product rule against the second-moment system") {
    const auto m = random_state(n, 9);
    const auto dphi = correlation_rhs(correlation(m), g_source(m, p), p);
    const auto dS = second_moment_rhs(m, p);
    const auto dv = volume_rhs(m.v, p);
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) {
        if (x == y) continue;
        const double ref = dS[x * n + y] - m.v[y] * dv[x] - m.v[x] * dv[y];
        CHECK(dphi.at(x, y) == doctest::Approx(ref).epsilon(1e-10).scale(1.0));
      }
  }
  SUBCASE("dense walk operator") {
    const auto phi_v = oracle::random_vector(static_cast<std::size_t>(n) * (n - 1), 21);
    CorrelationField phi(n);
    for (int x = 0; x < n; ++x)
      for (int r = 1; r < n; ++r) phi.at(x, x + r) = phi_v[walk_index(n, x, r)];
    const auto out = correlation_rhs(phi, DiscreteField(n), p);
    const Eigen::VectorXd ref =
        oracle::walk_rate_matrix(n, p.alpha_n()) * Eigen::Map<const Eigen::VectorXd>(phi_v.data(), phi_v.size());
    double total = 0.0, total_ref = 0.0;
    for (int x = 0; x < n; ++x)
      for (int r = 1; r < n; ++r) {
        CHECK(out.at(x, x + r) == doctest::Approx(ref(walk_index(n, x, r))).epsilon(1e-12).scale(1.0));
        total += out.at(x, x + r);
        total_ref += ref(walk_index(n, x, r));
      }
    CHECK(total == doctest::Approx(total_ref).scale(1.0));
  }
}

TEST_CASE("evolve") {
  SUBCASE("equilibrium is a fixed point") {
    const auto p = make_params(8, 0.5, 1.0);
    const auto eq = MomentState::equilibrium(8, 0.2, 1.0);
    const auto traj = evolve(eq, p, 0.05);
    CHECK(max_abs_diff_helper(traj.snapshots.back().S, eq.S) < 1e-10);
  }
  SUBCASE("dense matrix exponential at N=6") {
    const auto p = make_params(6, 0.5, 1.0);
    const auto m0 = example_state(6);
    const oracle::QuadraticGenerator gen(p);
    // Assemble the (v, S) generator from the brute-force oracle.
    const int n = 6, dim = n + n * n;
    Eigen::MatrixXd big = Eigen::MatrixXd::Zero(dim, dim);
    for (int j = 0; j < dim; ++j) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
      Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
      if (j < n) v(j) = 1; else s((j - n) / n, (j - n) % n) = 1;
      const Eigen::VectorXd dv = gen.mean_derivative(v);
      Eigen::MatrixXd ds = gen.second_moment_derivative(s);
      for (int i = 0; i < n; ++i) big(i, j) = dv(i);
      for (int i = 0; i < n * n; ++i) big(n + i, j) = ds(i / n, i % n);
    }
    Eigen::VectorXd y0(dim);
    for (int i = 0; i < n; ++i) y0(i) = m0.v[i];
    for (int i = 0; i < n * n; ++i) y0(n + i) = m0.S[i];
    const Eigen::VectorXd ref = oracle::expm(0.01 * big) * y0;
    for (auto f : {Formulation::SecondMoment, Formulation::EnergyCorrelation}) {
      EvolveOptions o;
      o.formulation = f;
      const auto snap = evolve(m0, p, 0.01, {}, o).snapshots.back();
      double err = 0.0;
      for (int i = 0; i < n; ++i) err = std::max(err, std::abs(snap.v[i] - ref(i)));
      for (int i = 0; i < n * n; ++i) err = std::max(err, std::abs(snap.S[i] - ref(n + i)));
      CHECK(err < 1e-8);
    }
  }
  SUBCASE("volume decouples") {
    const auto p = make_params(16, 0.5, 1.0);
    const auto m0 = example_state(16);
    const auto snap = evolve(m0, p, 0.02).snapshots.back();
    std::vector<double> v(m0.v.data());
    v = oracle::rk4(v, 0.02, 4000, [&](const std::vector<double>& u, std::vector<double>& du) {
      const auto d = volume_rhs(DiscreteField(u), p);
      du.assign(d.data().begin(), d.data().end());
    });
    for (int x = 0; x < 16; ++x) CHECK(snap.v[x] == doctest::Approx(v[x]).epsilon(1e-9).scale(1.0));
  }
  SUBCASE("conservation, PSD covariance and non-negative compressibility") {
    const int n = 10;
    const auto p = make_params(n, 0.5, 1.0);
    const auto m0 = example_state(n);
    std::vector<double> times;
    for (int i = 1; i <= 10; ++i) times.push_back(0.005 * i);
    const auto traj = evolve(m0, p, 0.05, times);
    REQUIRE(traj.snapshots.size() == times.size());
    for (const auto& m : traj.snapshots) {
      CHECK(m.t == doctest::Approx(times[&m - &traj.snapshots[0]]));
      CHECK(m.v.sum() == doctest::Approx(m0.v.sum()).epsilon(1e-10));
      CHECK(m.energy().sum() == doctest::Approx(m0.energy().sum()).epsilon(1e-10));
      Eigen::MatrixXd cov = as_matrix(m.S, n);
      for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) cov(x, y) -= m.v[x] * m.v[y];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
      CHECK(es.eigenvalues().minCoeff() >= -1e-8 * cov.trace());
      for (double c : m.compressibility().values()) CHECK(c >= -1e-8);
    }
  }
  SUBCASE("unreachable tolerance reports the achieved error") {
    const auto p = make_params(8, 0.5, 1.0);
    EvolveOptions o;
    o.tol = 1e-30;
    o.dt_min = 1e-3;
    try {
      evolve(example_state(8), p, 0.01, {}, o);
      FAIL("expected IntegratorFailure");
    } catch (const IntegratorFailure& e) {
      CHECK(e.achieved_error() > 0.0);
    }
  }
}

TEST_CASE("duhamel reconstruction") {
  const int n = 8;
  const auto p = make_params(n, 0.5, 1.0);
  const double h = 2.5e-4;
  const std::size_t steps = 40;
  const auto kernel = transition_kernel_2d(n, p.alpha_n(), h, steps);
  SUBCASE("constants are preserved without a source") {
    const CorrelationField c(n, 0.37);
    std::vector<DiscreteField> g(steps + 1, DiscreteField(n));
    const auto out = duhamel_reconstruct(c, g, h, kernel, p);
    for (int x = 0; x < n; ++x)
      for (int r = 1; r < n; ++r) CHECK(out.at(x, x + r) == doctest::Approx(0.37).epsilon(1e-9));
  }
  SUBCASE("t = 0 returns phi0") {
    const auto m0 = random_state(n, 5);
    const auto phi0 = correlation(m0);
    const auto out = duhamel_reconstruct(phi0, {g_source(m0, p)}, h, kernel, p);
    for (int x = 0; x < n; ++x)
      for (int r = 1; r < n; ++r) CHECK(out.at(x, x + r) == phi0.at(x, x + r));
  }
  SUBCASE("agrees with the ODE") {
    const auto m0 = example_state(n);
    std::vector<double> times;
    for (std::size_t j = 1; j <= steps; ++j) times.push_back(h * j);
    const auto traj = evolve(m0, p, h * steps, times);
    std::vector<DiscreteField> g{g_source(m0, p)};
    for (const auto& s : traj.snapshots) g.push_back(g_source(s, p));
    const auto out = duhamel_reconstruct(correlation(m0), g, h, kernel, p);
    const auto ref = correlation(traj.snapshots.back());
    double err = 0.0;
    for (int x = 0; x < n; ++x)
      for (int r = 1; r < n; ++r) err = std::max(err, std::abs(out.at(x, x + r) - ref.at(x, x + r)));
    CHECK(err < 1e-4);
  }
  SUBCASE("missing walk laws") {
    std::vector<DiscreteField> g(steps + 5, DiscreteField(n));
    CHECK_THROWS_AS(duhamel_reconstruct(CorrelationField(n), g, h, kernel, p), DependencyError);
  }
}

TEST_CASE("csv exports") {
  const auto m = MomentState::equilibrium(5, 0.0, 1.0);
  const auto prof = profile_csv({0.5}, {m.v});
  CHECK(prof.rfind("t,x,value\n", 0) == 0);
  const auto corr = correlation_csv({m});
  CHECK(corr.rfind("t,x,y,value\n", 0) == 0);
  CHECK(std::count(corr.begin(), corr.end(), '\n') == 1 + 5 * 4);
}
