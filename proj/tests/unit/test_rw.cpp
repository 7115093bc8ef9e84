#include <doctest.h>

#include <cmath>
#include <numeric>

#include "bschain/errors.hpp"
#include "bschain/rw.hpp"
#include "oracles.hpp"

using namespace bschain;

namespace {

Eigen::VectorXd as_vec(const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); }

double max_diff(const std::vector<double>& a, const Eigen::VectorXd& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b(static_cast<Eigen::Index>(i))));
  return m;
}

}  // namespace

TEST_CASE("walk indexing") {
  CHECK(walk_index(5, 0, 1) == 0);
  CHECK(walk_index(5, 2, 3) == 10);
  CHECK(walk_index_xy(5, 2, 0) == walk_index(5, 2, 3));
  CHECK(walk_index_xy(5, -3, 0) == walk_index(5, 2, 3));
  CHECK_THROWS_AS(walk_index_xy(5, 1, 6), IndexError);
  const auto u = uniform_2d(6);
  CHECK(std::accumulate(u.p.begin(), u.p.end(), 0.0) == doctest::Approx(1.0));
  CHECK(delta_2d(6, 1, 4).at(1, 4) == 1.0);
  CHECK(delta_2d(6, 1, 4).at(4, 1) == 0.0);
}

TEST_CASE("generator_2d") {
  const int n = 5;
  const double a = 0.3, n2 = 25.0;
  SUBCASE("point mass next to the diagonal") {
    const auto d = generator_2d(delta_2d(n, 0, 1).p, n, a);
    CHECK(d[walk_index(n, 0, 1)] == doctest::Approx(-2 * n2));
    CHECK(d[walk_index_xy(n, 0, 2)] == doctest::Approx(n2 * (1 + a)));
    CHECK(d[walk_index_xy(n, 4, 1)] == doctest::Approx(n2 * (1 - a)));
    CHECK(std::accumulate(d.begin(), d.end(), 0.0) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("interior point mass") {
    const auto d = generator_2d(delta_2d(n, 0, 2).p, n, a);
    CHECK(d[walk_index(n, 0, 2)] == doctest::Approx(-4 * n2));
    CHECK(d[walk_index_xy(n, 1, 2)] == doctest::Approx(n2 * (1 + a)));
    CHECK(d[walk_index_xy(n, 0, 1)] == doctest::Approx(n2 * (1 - a)));
    CHECK(d[walk_index_xy(n, 0, 3)] == doctest::Approx(n2 * (1 + a)));
    CHECK(d[walk_index_xy(n, 4, 2)] == doctest::Approx(n2 * (1 - a)));
  }
  SUBCASE("matches the dense rate matrix") {
    const auto p = oracle::random_vector(static_cast<std::size_t>(n) * (n - 1), 5, 0.0, 1.0);
    const Eigen::MatrixXd q = oracle::walk_rate_matrix(n, a);
    CHECK(max_diff(generator_2d(p, n, a), q.transpose() * as_vec(p)) < 1e-10);
  }
  CHECK_THROWS_AS(generator_2d(uniform_2d(n).p, n, 1.0), InvalidParameter);
  CHECK_THROWS_AS(generator_2d(uniform_2d(n).p, n, -0.1), InvalidParameter);
}

TEST_CASE("forward_solve_2d") {
  const int n = 6;
  const double a = 0.4;
  const std::vector<double> sched{0.001, 0.01, 0.05};
  const auto p0 = delta_2d(n, 1, 3);
  const auto laws = forward_solve_2d(p0, a, 0.05, sched);
  REQUIRE(laws.size() == 3);
  const Eigen::MatrixXd qt = oracle::walk_rate_matrix(n, a).transpose();
  for (std::size_t i = 0; i < laws.size(); ++i) {
    CHECK(laws[i].t == doctest::Approx(sched[i]));
    CHECK(std::accumulate(laws[i].p.begin(), laws[i].p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(max_diff(laws[i].p, oracle::expm(qt * sched[i]) * as_vec(p0.p)) < 1e-8);
    laws[i].validate();
  }
  SUBCASE("alpha = 0 relaxes to the uniform law") {
    const auto u = forward_solve_2d(delta_2d(8, 0, 1), 0.0, 1.0, std::vector<double>{1.0})[0];
    const double flat = 1.0 / (8 * 7);
    for (double v : u.p) CHECK(std::abs(v - flat) < 1e-8);
  }
}

TEST_CASE("projection commutes with the dynamics") {
  for (int n : {5, 8, 16}) {
    CAPTURE(n);
    const auto p0 = delta_2d(n, 2, 4);
    const auto q0 = project_to_1d(p0);
    CHECK(q0.at(2) == 1.0);
    const std::vector<double> sched{0.002, 0.02};
    const auto p = forward_solve_2d(p0, 0.5, 0.02, sched);
    const auto q = forward_solve_1d(q0, 0.02, sched);
    for (std::size_t i = 0; i < sched.size(); ++i) {
      const auto proj = project_to_1d(p[i]);
      double m = 0.0;
      for (int r = 1; r < n; ++r) m = std::max(m, std::abs(proj.at(r) - q[i].at(r)));
      CHECK(m < 1e-9);
    }
  }
  auto u = uniform_2d(5);
  const auto q = project_to_1d(u);
  for (int r = 1; r < 5; ++r) CHECK(q.at(r) == doctest::Approx(0.25));
}

TEST_CASE("forward_solve_1d against the matrix exponential") {
  for (int n : {3, 8}) {
    CAPTURE(n);
    const auto q0 = delta_1d(n, 1);
    const double t = 0.03;
    const auto q = forward_solve_1d(q0, t, std::vector<double>{t})[0];
    const Eigen::MatrixXd e = oracle::expm(oracle::walk1d_rate_matrix(n).transpose() * t);
    CHECK(max_diff(q.q, e * as_vec(q0.q)) < 1e-9);
    const auto d = generator_1d(q0.q, n);
    CHECK(max_diff(d, oracle::walk1d_rate_matrix(n).transpose() * as_vec(q0.q)) < 1e-9);
  }
}

TEST_CASE("local time") {
  SUBCASE("N = 3 never leaves the boundary") { CHECK(local_time(3, 1, 0.7) == doctest::Approx(0.7).epsilon(1e-9)); }
  SUBCASE("bounded by the horizon") {
    for (int n : {8, 32}) CHECK(local_time(n, n / 2, 0.5) <= 0.5 + 1e-12);
    CHECK(local_time(16, 4, 0.0) == 0.0);
  }
  SUBCASE("Dynkin identity for a quadratic") {
    // g(r) = -(r - N/2)^2 has Lg = -4N^2 + 2N^2 (N - 1) 1{r in {1, N-1}}.
    const int n = 12, r0 = 3;
    const double t = 0.05, x0 = n / 2.0, n2 = static_cast<double>(n) * n;
    const auto q = forward_solve_1d(delta_1d(n, r0), t, std::vector<double>{t})[0];
    double eg = 0.0;
    for (int r = 1; r < n; ++r) eg -= q.at(r) * (r - x0) * (r - x0);
    const double g0 = -(r0 - x0) * (r0 - x0);
    const double expected = (eg - g0 + 4 * n2 * t) / (2 * n2 * (n - 1));
    CHECK(local_time(n, r0, t) == doctest::Approx(expected).epsilon(1e-7));
  }
}

TEST_CASE("transition kernel") {
  const int n = 5;
  const auto k = transition_kernel_2d(n, 0.2, 0.004, 3);
  const Eigen::MatrixXd qt = oracle::walk_rate_matrix(n, 0.2).transpose();
  for (std::size_t start : {std::size_t{0}, std::size_t{7}}) {
    CHECK(k.law(start, 0)[start] == 1.0);
    const Eigen::VectorXd e = oracle::expm(qt * 0.012).col(static_cast<Eigen::Index>(start));
    CHECK(max_diff(k.law(start, 3), e) < 1e-9);
  }
}

TEST_CASE("Monte Carlo walker agrees with the forward law") {
  const int n = 6;
  const double a = 0.3, t = 0.02;
  const std::size_t start = walk_index(n, 2, 1);
  WalkDistribution2D p0{n, std::vector<double>(static_cast<std::size_t>(n) * (n - 1), 0.0), 0.0};
  p0.p[start] = 1.0;
  const auto p = forward_solve_2d(p0, a, t, std::vector<double>{t})[0];
  const int m = 40000;
  std::vector<double> freq(p.p.size(), 0.0);
  std::mt19937_64 rng(12345);
  for (int i = 0; i < m; ++i) freq[sample_walk_2d(n, a, start, t, rng)] += 1.0 / m;
  for (std::size_t i = 0; i < freq.size(); ++i) {
    const double se = std::sqrt(p.p[i] * (1 - p.p[i]) / m);
    CHECK(std::abs(freq[i] - p.p[i]) <= 4.5 * se + 2e-4);
  }
}

TEST_CASE("simple random walk transition") {
  const int n = 16;
  CHECK(srw_transition(3, 3, 0.0, n) == doctest::Approx(1.0));
  CHECK(std::abs(srw_transition(3, 4, 0.0, n)) < 1e-14);
  CHECK(srw_transition(0, 5, 10.0, n) == doctest::Approx(1.0 / n));
  CHECK(srw_transition(2, 7, 0.003, n) == doctest::Approx(srw_transition(7, 2, 0.003, n)));
  CHECK_THROWS_AS(srw_transition(0, 0, -1.0, n), InvalidParameter);
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (int x = 0; x < n; ++x) {
    l(x, (x + 1) % n) += n * n;
    l(x, (x + n - 1) % n) += n * n;
    l(x, x) -= 2.0 * n * n;
  }
  const double t = 0.002;
  const Eigen::MatrixXd e = oracle::expm(l * t);
  const auto row = srw_row(n, t);
  for (int d = 0; d < n; ++d) {
    CHECK(srw_transition(0, d, t, n) == doctest::Approx(e(0, d)).epsilon(1e-10));
    CHECK(row[d] == doctest::Approx(e(0, d)).epsilon(1e-10));
  }
}

TEST_CASE("derivative bounds") {
  const int n = 32;
  const std::vector<double> ts{0.001, 0.01};
  const auto rep = srw_derivative_bounds(n, ts);
  const auto row = srw_row(n, 0.01);
  double lap = 0.0;
  for (int d = 0; d < n; ++d)
    lap = std::max(lap, std::abs(n * n * (row[(d + 1) % n] + row[(d + n - 1) % n] - 2 * row[d])));
  CHECK(rep.lap_scaled[1] == doctest::Approx(n * std::pow(0.01, 1.5) * lap));
  CHECK(rep.sup_lap >= rep.lap_scaled[0]);
  CHECK_THROWS_AS(srw_derivative_bounds(n, std::vector<double>{0.0}), InvalidParameter);
  const auto csv = bound_report_csv({rep});
  CHECK(csv.rfind("N,t,quantity,value\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}
