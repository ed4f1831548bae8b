#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gen.hpp"
#include "qgevrey/quadrature.hpp"

using namespace qgevrey;

TEST_CASE("Gauss-Legendre rules integrate polynomials of degree 2n-1 exactly") {
  for (int n : {1, 2, 3, 5, 8, 20, 24, 25}) {
    const auto& r = gauss_legendre<double>(n);
    double wsum = 0;
    for (double w : r.w) wsum += w;
    CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));
    for (int d = 0; d <= 2 * n - 1; ++d) {
      double s = 0;
      for (int i = 0; i < n; ++i) s += r.w[i] * std::pow(r.x[i], d);
      const double exact = d % 2 ? 0.0 : 2.0 / (d + 1);
      CHECK(std::abs(s - exact) < 1e-13);
    }
    for (int i = 0; i + 1 < n; ++i) CHECK(r.x[i] < r.x[i + 1]);
  }
}

TEST_CASE("long double rule agrees with the double rule") {
  const auto& a = gauss_legendre<double>(24);
  const auto& b = gauss_legendre<long double>(24);
  for (int i = 0; i < 24; ++i) {
    CHECK(std::abs(a.x[i] - double(b.x[i])) < 1e-15);
    CHECK(std::abs(a.w[i] - double(b.w[i])) < 1e-15);
  }
}

TEST_CASE("composite rule on smooth and complex integrands") {
  auto br = graded_breaks<double>(0.0, 10.0, 1e-6, 1.5, 0.5);
  CHECK(br.front() == 0.0);
  CHECK(br.back() == 10.0);
  for (std::size_t k = 0; k + 1 < br.size(); ++k) CHECK(br[k] < br[k + 1]);
  auto r = integrate_panels<double>([](double x) { return std::exp(-x); }, br);
  CHECK(r.value == doctest::Approx(1 - std::exp(-10.0)).epsilon(1e-15));
  CHECK(r.error < 1e-13);
  auto c = integrate_panels<double>(
      [](double x) { return std::exp(std::complex<double>(0, x)); }, br);
  const auto want = (std::exp(std::complex<double>(0, 10.0)) - 1.0) / std::complex<double>(0, 1);
  CHECK(std::abs(c.value - want) < 1e-13);
}

TEST_CASE("Gaussian moment matches exp(a^2/4) sqrt(pi)") {
  Gen g(8);
  for (int k = 0; k < 30; ++k) {
    const double a = g.uniform(-4, 4);
    const double exact = std::exp(a * a / 4) * std::sqrt(std::numbers::pi);
    CHECK(std::abs(gaussian_moment(a) - exact) <= 1e-13 * exact);
  }
}

TEST_CASE("pairwise sum and ipow") {
  std::vector<double> v(1000, 0.1);
  CHECK(pairwise_sum(v) == doctest::Approx(100.0).epsilon(1e-14));
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
  Gen g(2);
  for (int k = 0; k < 50; ++k) {
    const std::complex<double> z = g.polar(0.5, 2);
    const int n = g.integer(0, 20);
    CHECK(std::abs(ipow(z, n) - std::pow(z, double(n))) <= 1e-12 * std::pow(std::abs(z), n));
  }
}

TEST_CASE("parallel_for visits every index once and rethrows") {
  std::vector<int> hits(97, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(10, 3,
                               [](std::size_t i) {
                                 if (i == 7) throw std::runtime_error("x");
                               }),
                  std::runtime_error);
}
