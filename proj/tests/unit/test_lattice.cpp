#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bschain/errors.hpp"
#include "bschain/lattice.hpp"
#include "oracles.hpp"

using namespace bschain;

namespace {

void require_field(const DiscreteField& f, std::initializer_list<double> expect, double tol = 1e-12) {
  REQUIRE(f.size() == static_cast<int>(expect.size()));
  int i = 0;
  for (double e : expect) CHECK(f[i++] == doctest::Approx(e).epsilon(tol));
}

}  // namespace

TEST_CASE("torus arithmetic wraps negative and large indices") {
  Torus t{5};
  CHECK(t.next(4) == 0);
  CHECK(t.prev(0) == 4);
  CHECK(t.wrap(-1) == 4);
  CHECK(t.wrap(-11) == 4);
  CHECK(t.wrap(12) == 2);
  DiscreteField f{1, 2, 3, 4, 5};
  CHECK(f.at(-1) == 5);
  CHECK(f.at(7) == 3);
}

TEST_CASE("fields reject non-finite values and tiny sizes") {
  CHECK_THROWS_AS(DiscreteField(std::vector<double>{1.0, NAN, 2.0}), InvalidParameter);
  CHECK_THROWS_AS(DiscreteField(1), InvalidParameter);
}

TEST_CASE("grad_forward") {
  require_field(grad_forward(DiscreteField{0, 1, 0, 0}), {4, -4, 0, 0});
  CHECK(grad_forward(DiscreteField(7, 3.5)).max_abs() == 0.0);
  const int n = 8;
  const auto f = sample(n, [](double u) { return std::cos(2 * std::numbers::pi * u); });
  const auto g = grad_forward(f);
  for (int x = 0; x < n; ++x) CHECK(g[x] == doctest::Approx(n * (f[(x + 1) % n] - f[x])).epsilon(1e-14));
}

TEST_CASE("grad_centered") {
  require_field(grad_centered(DiscreteField{0, 1, 0, 0}), {2, 0, -2, 0});
  CHECK(grad_centered(DiscreteField(6, -1.0)).max_abs() == 0.0);
  const auto f = oracle::random_field(16, 11);
  const auto gc = grad_centered(f);
  const auto gf = grad_forward(f);
  for (int x = 0; x < 16; ++x) CHECK(gc[x] == doctest::Approx(0.5 * (gf[x] + gf.at(x - 1))).epsilon(1e-13));
}

TEST_CASE("laplacian_1d") {
  require_field(laplacian_1d(DiscreteField{0, 1, 0, 0}), {16, -32, 16, 0});
  CHECK(laplacian_1d(DiscreteField(9, 2.0)).max_abs() == 0.0);
  for (int n : {8, 13, 32})
    for (int z : {-3, -1, 1, 2}) {
      const auto f = sample(n, [z](double u) { return fourier_basis(z, u); });
      const auto l = laplacian_1d(f);
      const double lam = laplacian_symbol(n, std::abs(z));
      CHECK(lam == doctest::Approx(4.0 * n * n * std::pow(std::sin(std::numbers::pi * z / n), 2)));
      for (int x = 0; x < n; ++x) CHECK(l[x] == doctest::Approx(-lam * f[x]).epsilon(1e-10).scale(1.0));
    }
}

TEST_CASE("laplacian is N times grad_forward of the backward difference") {
  const auto f = oracle::random_field(12, 3);
  const auto l = laplacian_1d(f);
  const auto gg = grad_forward(grad_backward(f));
  for (int x = 0; x < 12; ++x) CHECK(l[x] == doctest::Approx(gg[x]).epsilon(1e-12));
}

TEST_CASE("summation by parts") {
  const int n = 10;
  const auto f = oracle::random_field(n, 5);
  const auto g = oracle::random_field(n, 6);
  const auto dg = grad_forward(g);
  const auto df = grad_forward(f);
  double lhs = 0.0, rhs = 0.0;
  for (int x = 0; x < n; ++x) {
    lhs += f[x] * dg[x];
    rhs -= df.at(x - 1) * g[x];
  }
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
}

TEST_CASE("dft conventions") {
  DiscreteField delta(6);
  delta[0] = 1.0;
  for (const auto& c : dft(delta.values())) CHECK(std::abs(c - Complex(1.0, 0.0)) < 1e-15);
  const auto s = dft(DiscreteField(5, 2.5).values());
  CHECK(std::abs(s[0] - Complex(12.5, 0.0)) < 1e-13);
  for (int k = 1; k < 5; ++k) CHECK(std::abs(s[k]) < 1e-13);
  // sign of the exponent: a single mode e^{2 pi i x / N} lands on k = 1
  const int n = 7;
  std::vector<Complex> mode(n);
  for (int x = 0; x < n; ++x) mode[x] = std::polar(1.0, 2 * std::numbers::pi * x / n);
  const auto m = dft(std::span<const Complex>(mode));
  CHECK(std::abs(m[1] - Complex(n, 0)) < 1e-12);
}

TEST_CASE("dft round trip for arbitrary N") {
  for (int n : {3, 32, 45, 97}) {
    const auto f = oracle::random_field(n, 100 + n);
    const auto back = idft(dft(f.values()));
    double err = 0.0;
    for (int x = 0; x < n; ++x) err = std::max(err, std::abs(back[x] - f[x]));
    CHECK(err < 1e-12);
  }
}

TEST_CASE("fourier basis") {
  CHECK(fourier_basis(0, 0.3) == 1.0);
  CHECK(fourier_basis(2, 0.1) == doctest::Approx(std::numbers::sqrt2 * std::cos(2 * std::numbers::pi * 0.2)));
  CHECK(fourier_basis(-2, 0.1) == doctest::Approx(std::numbers::sqrt2 * std::sin(-2 * std::numbers::pi * 0.2)));
  CHECK(sobolev_gamma(3) == doctest::Approx(1 + 36 * std::numbers::pi * std::numbers::pi));
  for (int n : {16, 40}) {
    double worst = 0.0;
    for (int z = -n / 4; z <= n / 4; ++z)
      for (int w = -n / 4; w <= n / 4; ++w) {
        const auto hz = sample(n, [z](double u) { return fourier_basis(z, u); });
        const auto hw = sample(n, [w](double u) { return fourier_basis(w, u); });
        worst = std::max(worst, std::abs(riemann_inner(hz, hw) - (z == w ? 1.0 : 0.0)));
      }
    CHECK(worst <= 10.0 / n);
  }
}
