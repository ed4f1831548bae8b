#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "gen.hpp"
#include "qgevrey/weighted_norms.hpp"

using namespace qgevrey;

namespace {

std::shared_ptr<CoefficientTable> example_table() {
  return std::make_shared<CoefficientTable>(
      std::make_shared<const ProblemSpec>(fixtures::example_spec()));
}

NormGrid sector_grid(double dir) {
  NormGrid g;
  g.arg_lo = dir - 0.2;
  g.arg_hi = dir + 0.2;
  g.max_refinements = 3;
  return g;
}

}  // namespace

TEST_CASE("norms of W_0 = 1 in closed form") {
  auto t = example_table();
  const auto n = fixtures::example_norms();
  const auto s = fixtures::example_schedule();
  for (double r : {0.05, 0.1, 0.3}) {
    const cplx eps = std::polar(r, 2.9);
    // Outer weight decreases in |tau|: the sup sits on |tau| = R_0.
    const double l = std::log(0.5 * (1 + 1e-9) / r + 1.0);
    const auto o = outer_norm(*t->get(0), eps, n, s, sector_grid(2.9));
    CHECK(o.value == doctest::Approx(std::exp(-0.1 * l * l)).epsilon(1e-12));
    // Inner weight increases toward 0: the sup sits on the floor radius.
    const double rf = 0.9 * (1 - 1e-9) * 1e-6;
    const double li = std::log(rf + 1.0);
    const auto in = inner_norm(*t->get(0), eps, n, s, sector_grid(2.9));
    CHECK(in.value == doctest::Approx(std::exp(-0.1 * li * li)).epsilon(1e-12));
  }
}

TEST_CASE("norm estimate is a realized sample and matches a dense brute-force sup") {
  auto t = example_table();
  const auto n = fixtures::example_norms();
  const auto s = fixtures::example_schedule();
  const cplx eps = std::polar(0.1, 2.9);
  for (int beta = 1; beta <= 5; ++beta) {
    const auto& c = *t->get(beta);
    auto g = sector_grid(2.9);

    const auto est = outer_norm(c, eps, n, s, g);
    double dense = 0;
    const double r_lo = s.R(beta) * (1 + 1e-9);
    for (int i = 0; i <= 3000; ++i) {
      const double r = r_lo * std::pow(g.r_outer / r_lo, i / 3000.0);
      const double l = std::log(r / 0.1 + 1.0);
      const double w = std::exp(-0.1 * l * l - 0.2 * beta * std::log(r / 0.1) +
                                0.25 * beta * beta * std::log(2.0));
      for (int j = 0; j <= 64; ++j) {
        const double th = g.arg_lo + (g.arg_hi - g.arg_lo) * j / 64;
        dense = std::max(dense, std::abs(eval_W(c, eps, std::polar(r, th))) * w);
      }
    }
    // The estimate is attained at argmax_tau, so it can never exceed the true sup.
    const double ra = std::abs(est.argmax_tau);
    const double la = std::log(ra / 0.1 + 1.0);
    const double wa = std::exp(-0.1 * la * la - 0.2 * beta * std::log(ra / 0.1) +
                               0.25 * beta * beta * std::log(2.0));
    CHECK(std::abs(eval_W(c, eps, est.argmax_tau)) * wa == doctest::Approx(est.value).epsilon(1e-12));
    CHECK(std::abs(std::arg(est.argmax_tau) - 2.9) <= g.arg_hi - 2.9 + 1e-12);
    CHECK(est.value >= 0.999 * dense);
    CHECK(est.value <= 1.01 * dense);
    CHECK(est.grid_size > 0);
  }
}

TEST_CASE("refinement does not lower the reported norm") {
  auto t = example_table();
  const auto n = fixtures::example_norms();
  const auto s = fixtures::example_schedule();
  const cplx eps = std::polar(0.07, 3.0);
  for (int beta = 2; beta <= 6; beta += 2) {
    double prev = 0;
    for (int lev = 0; lev <= 3; ++lev) {
      auto g = sector_grid(3.0);
      g.max_refinements = lev;
      g.rel_tol = 0;  // always refine to the cap
      const double v = inner_norm(*t->get(beta), eps, n, s, g).value;
      CHECK(v >= prev * (1 - 1e-6));
      prev = v;
    }
  }
}

TEST_CASE("fit_growth recovers amplitude and rate of synthetic sequences") {
  Gen g(21);
  for (int k = 0; k < 30; ++k) {
    const double C = g.log_uniform(0.1, 10), rate = g.log_uniform(0.05, 3), delta = 0.5;
    std::vector<double> v;
    for (int b = 0; b <= 15; ++b) v.push_back(C * std::tgamma(b + 1.0) * std::pow(rate / delta, b));
    const auto f = fit_growth(v, delta);
    CHECK(f.C_rate == doctest::Approx(rate).epsilon(1e-9));
    CHECK(f.C_amp == doctest::Approx(C).epsilon(1e-9));
    for (double sl : f.slack) CHECK(sl >= -1e-9);
  }
}

TEST_CASE("fit_growth with an outlier moves only the amplitude") {
  std::vector<double> v;
  for (int b = 0; b <= 15; ++b) v.push_back(2.0 * std::tgamma(b + 1.0) * std::pow(0.4, b));
  const auto clean = fit_growth(v, 0.5);
  v[7] *= 10;
  const auto dirty = fit_growth(v, 0.5);
  CHECK(dirty.C_rate == doctest::Approx(clean.C_rate).epsilon(1e-12));
  CHECK(dirty.C_amp <= 10 * clean.C_amp * (1 + 1e-12));
  CHECK(dirty.C_amp > clean.C_amp);
  for (double sl : dirty.slack) CHECK(sl >= -1e-12);
}

TEST_CASE("fit_growth input validation") {
  CHECK_THROWS_AS(fit_growth({1, 2, 3}, 0.5), ValidationError);
  CHECK_THROWS_AS(fit_growth({1, 2, 3, -1, 5}, 0.5), DataError);
  const auto z = fit_growth({0, 0, 0, 0, 0, 0}, 0.5);
  CHECK(z.degenerate);
}
