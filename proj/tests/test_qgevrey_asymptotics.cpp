#include <doctest.h>

#include <cmath>
#include <limits>

#include "gen.hpp"
#include "qgevrey/qgevrey_asymptotics.hpp"

using namespace qgevrey;

namespace {

// Plain long double summation of the first n terms.
long double brute_sum(const DirichletParams& p, double eps, int n) {
  long double s = 0;
  for (int b = 0; b < n; ++b)
    s += std::pow((long double)p.D1, b) * std::pow((long double)p.q, (long double)p.A1 * b * b) *
         std::exp(-(long double)p.D2 * std::pow((long double)p.q, (long double)p.d2 * b) / eps);
  return s;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> v;
  for (int k = 0; k < n; ++k) v.push_back(hi * std::pow(lo / hi, double(k) / (n - 1)));
  return v;
}

}  // namespace

TEST_CASE("direct Dirichlet sum against brute-force long double summation") {
  Gen g(31);
  for (int k = 0; k < 60; ++k) {
    DirichletParams p;
    p.D1 = g.log_uniform(0.1, 10);
    p.D2 = g.uniform(1.1, 4);
    p.A1 = g.uniform(0.3, 2);
    p.d2 = g.uniform(0.5, 2);
    p.q = g.uniform(0.2, 0.8);
    const double eps = g.log_uniform(0.02, 2);
    const auto d = dirichlet_direct(p, eps);
    const long double want = brute_sum(p, eps, 2000);
    CHECK(std::abs(d.sum - double(want)) <= 1e-13 * double(want));
    CHECK(d.log_sum == doctest::Approx(std::log(double(want))).epsilon(1e-12));
  }
}

TEST_CASE("tiny D1 leaves the first two terms") {
  // For small eps the beta = 0 term is the smallest one; with D1 = 1e-12 the terms beyond
  // beta = 1 fall below 1e-24 of the sum for eps >= 0.2.
  DirichletParams p;
  p.D1 = 1e-12;
  for (double eps : {0.2, 0.5, 1.0, 2.0}) {
    const double want = std::exp(-p.D2 / eps) + p.D1 * p.q * std::exp(-p.D2 * p.q / eps);
    CHECK(dirichlet_direct(p, eps).sum == doctest::Approx(want).epsilon(1e-14));
  }
}

TEST_CASE("Euler-Maclaurin identity equals the direct sum") {
  Gen g(7);
  for (int k = 0; k < 40; ++k) {
    DirichletParams p;
    p.D1 = g.log_uniform(0.5, 4);
    p.D2 = g.uniform(1.1, 3);
    p.A1 = g.uniform(0.3, 1.5);
    p.q = g.uniform(0.3, 0.7);
    const double eps = g.log_uniform(0.03, 1);
    const int n = euler_maclaurin_cutoff(p, eps);
    const auto em = dirichlet_euler_maclaurin(p, eps, n);
    const double direct = dirichlet_direct(p, eps).sum;
    CHECK(std::abs(em.value - direct) <= 1e-10 * direct);
    CHECK(std::abs(em.correction) <= 0.5 * em.abs_fprime + 1e-300);
  }
  DirichletParams p;
  CHECK_THROWS_AS(dirichlet_euler_maclaurin(p, 0.1, 0), ValidationError);
  CHECK_THROWS_AS(dirichlet_euler_maclaurin(p, -0.1, 5), DomainError);
}

TEST_CASE("envelope constant is stable for Delta > 1") {
  DirichletParams p;
  p.D1 = 2;
  p.D2 = 2;
  const auto g = log_grid(1e-4, 1e-1, 10);
  const auto r = dirichlet_bound_check(p, 1.1, g);
  CHECK(r.pass);
  CHECK(r.rel_change < 0.1);
  CHECK(r.stable_prefix == 10);
  // Extending toward 0 keeps E1 bounded.
  const double wide = dirichlet_envelope_E1(p, 1.1, log_grid(1e-8, 1e-1, 30));
  CHECK(wide <= 1.1 * r.E1);
}

TEST_CASE("hypothesis gates") {
  DirichletParams p;
  const auto g = log_grid(1e-4, 1e-1, 10);
  CHECK_THROWS_WITH_AS(dirichlet_bound_check(p, 1.0, g), "Delta must exceed 1", HypothesisError);
  CHECK_THROWS_AS(dirichlet_bound_check(p, 0.5, g), HypothesisError);
  p.D2 = 1.0;
  CHECK_THROWS_AS(dirichlet_direct(p, 0.1), HypothesisError);
  p.D2 = 2.0;
  CHECK_THROWS_AS(dirichlet_bound_check(p, 1.1, log_grid(1e-4, 1e-1, 5)), ValidationError);
  CHECK_THROWS_AS(dirichlet_bound_check(p, 1.1, log_grid(1e-4, 0.9, 10)), ValidationError);
}

TEST_CASE("below the sharp threshold the envelope constant blows up") {
  // The sum decays like the envelope with Delta = 1/2; Delta = 1/4 loses as eps -> 0.
  DirichletParams p;
  p.D1 = 2;
  const double near = dirichlet_envelope_E1(p, 0.25, log_grid(1e-4, 1e-1, 20));
  const double far = dirichlet_envelope_E1(p, 0.25, log_grid(1e-12, 1e-1, 40));
  CHECK(far > 1e3 * near);
}

TEST_CASE("flat type round trip") {
  Gen g(12);
  const double q = 0.5;
  for (int k = 0; k < 30; ++k) {
    const double A = g.log_uniform(0.2, 5);
    const double C = g.log_uniform(0.1, 10);
    std::vector<std::pair<double, double>> s;
    for (double e : log_grid(1e-7, 1e-1, 20)) {
      const double l = std::log(e);
      s.emplace_back(e, C * std::exp(-l * l / (2 * A * -std::log(q))));
    }
    const auto f = fit_flat_type(s, q);
    CHECK(f.flat);
    CHECK(f.fitted_type == doctest::Approx(A).epsilon(1e-8));
    CHECK(f.intercept == doctest::Approx(std::log(C)).epsilon(1e-6));
    // Scaling every sample moves only the intercept.
    auto scaled = s;
    for (auto& [e, v] : scaled) v *= 7.5;
    const auto fs = fit_flat_type(scaled, q);
    CHECK(fs.slope == doctest::Approx(f.slope).epsilon(1e-10));
    CHECK(fs.intercept == doctest::Approx(f.intercept + std::log(7.5)).epsilon(1e-10));
  }
}

TEST_CASE("non-flat data and malformed samples") {
  std::vector<std::pair<double, double>> c;
  for (double e : log_grid(1e-6, 1e-1, 12)) c.emplace_back(e, 3.0);
  const auto f = fit_flat_type(c, 0.5);
  CHECK_FALSE(f.flat);
  CHECK(std::isinf(f.fitted_type));
  // A power law has no finite type: the fitted type grows as the grid reaches toward 0.
  double prev = 0;
  for (double lo : {1e-3, 1e-6, 1e-12, 1e-24}) {
    std::vector<std::pair<double, double>> s;
    for (double e : log_grid(lo, 1e-1, 16)) s.emplace_back(e, e * e);
    const double t = fit_flat_type(s, 0.5).fitted_type;
    CHECK(t > 1.5 * prev);
    prev = t;
  }
  CHECK_THROWS_AS(fit_flat_type({{0.1, 1}, {0.01, 1}}, 0.5), ValidationError);
  std::vector<std::pair<double, double>> narrow;
  for (double e : log_grid(0.01, 0.05, 10)) narrow.emplace_back(e, e);
  CHECK_THROWS_AS(fit_flat_type(narrow, 0.5), ValidationError);
  narrow[0].second = -1;
  CHECK_THROWS_AS(fit_flat_type(narrow, 0.5), DataError);
}

TEST_CASE("expansion check on 1/(1 - eps)") {
  std::vector<std::pair<cplx, cplx>> s;
  for (double r : {0.02, 0.05, 0.1, 0.2})
    for (double th : {-2.5, -1.0, 0.0, 1.0, 2.5}) {
      const cplx e = std::polar(r, th);
      s.emplace_back(e, 1.0 / (1.0 - e));
    }
  const std::vector<cplx> ones(21, 1.0);
  // Remainder |eps|^{N+1} / |1 - eps| needs C1 >= 1.25 (N+1)! q^{A N^2 / 2}, about 1.9 at A = 1.
  const auto ok = check_expansion(s, ones, 1.0, 1.0, 2.0, 0.5);
  CHECK(ok.pass);
  CHECK(ok.C1_min <= 2.0);
  CHECK(ok.rows.size() == 21);
  // A = 0.1 is too small a type once N = 20: (N+1)! outruns q^{-A N^2 / 2}.
  const auto bad = check_expansion(s, ones, 0.1, 1.0, 2.0, 0.5);
  CHECK_FALSE(bad.pass);
  CHECK_FALSE(bad.rows.back().pass);
  CHECK(bad.C1_min > 1e10);
  // Exact polynomial data leaves no remainder.
  std::vector<std::pair<cplx, cplx>> poly;
  for (const auto& [e, v] : s) poly.emplace_back(e, 1.0 + e + e * e);
  const auto ex = check_expansion(poly, {1.0, 1.0, 1.0}, 1.0, 1.0, 1.0, 0.5);
  CHECK(ex.rows.back().max_remainder < 1e-15);
  CHECK_THROWS_AS(check_expansion(s, ones, 0.0, 1.0, 1.0, 0.5), ValidationError);
}

TEST_CASE("Gaussian check of the expansion on a flat perturbation") {
  // exp(-log^2|eps| / (2 (-log q))) is flat of type 1; its expansion is zero.
  const double q = 0.5;
  std::vector<std::pair<cplx, cplx>> s;
  for (double r : {0.01, 0.03, 0.1, 0.2}) {
    const double l = std::log(r);
    s.emplace_back(std::polar(r, 0.3), std::exp(-l * l / (2 * -std::log(q))));
  }
  const auto rep = check_expansion(s, std::vector<cplx>(13, 0.0), 2.0, 1.0, 16.0, q);
  CHECK(rep.pass);
}

TEST_CASE("Watson transfer preserves the flatness type") {
  const double q = 0.5;
  const long double lq = std::log(2.0L);
  std::function<long double(long double)> f = [lq](long double s) {
    const long double l = std::log(s);
    return std::exp(-l * l / (2 * lq));
  };
  const auto r = watson_transfer<long double>(f, 1.0L, 1e-20, 1e-6, 16, q);
  CHECK(r.pass);
  CHECK(std::abs(r.degradation) <= 0.15);
  CHECK(r.fit_f.fitted_type == doctest::Approx(1.0).epsilon(1e-6));
  std::function<long double(long double)> zero = [](long double) { return 0.0L; };
  CHECK(watson_transfer<long double>(zero, 1.0L, 1e-20, 1e-6, 16, q).zero);
  CHECK_THROWS_AS(watson_transfer<long double>(f, 1.0L, 1e-20, 1e-6, 4, q), ValidationError);
}
