#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "fixtures.hpp"
#include "gen.hpp"
#include "qgevrey/borel_recursion.hpp"

using namespace qgevrey;

namespace {

// S = 3 with two kappa entries, a tau-dependent b and initial data carrying tau and eps powers.
ProblemSpec rich_spec() {
  ProblemSpec p;
  p.S = 3;
  p.a = std::polar(1.3, 2.5);
  p.q = 0.6;
  KappaEntry k1;
  k1.k0 = 1;
  k1.k1 = 1;
  k1.m1 = 1;
  k1.m2 = 2;
  k1.b[0] = EpsPoly({1.0, 1.0});
  k1.b[1] = EpsPoly::constant(0.5);
  KappaEntry k2;
  k2.k0 = 0;
  k2.k1 = 2;
  k2.m1 = 2;
  k2.m2 = 1;
  k2.b[2] = EpsPoly({0.0, 0.0, cplx(0.3, -0.2)});
  p.kappa = {k1, k2};
  InitTerm c0;
  c0.c = {0.5, 0.25};
  InitTerm t1;
  t1.tau_power = 1;
  t1.eps_power = 1;
  t1.pole_order = 2;
  InitTerm p1;
  p1.c = {-1.0, 0.5};
  p1.pole_order = 1;
  p.initial_data = {{c0}, {t1, p1}, {c0, t1}};
  return p;
}

// Direct numeric recursion for W_beta(eps, tau); shares nothing with the term engine.
cplx brute_W(const ProblemSpec& sp, int beta, cplx eps, cplx tau) {
  if (beta < sp.S) return eval_initial(sp.initial_data[beta], sp.a, eps, tau);
  const int h = beta - sp.S;
  cplx acc{};
  for (const auto& k : sp.kappa) {
    for (const auto& [s, b] : k.b) {
      if (s > h) continue;
      const int h2 = h - s;
      const cplx pre = b.eval(eps) * std::pow(-tau / eps, double(k.k0)) *
                       std::pow(sp.q, double(k.m2 * h2)) /
                       ((sp.a - tau) * std::tgamma(h2 + 1.0) *
                        std::pow(sp.q, double(k.m1 * (k.k0 + 1))));
      acc += pre * brute_W(sp, h2 + k.k1, eps, std::pow(sp.q, -double(k.m1)) * tau);
    }
  }
  return std::tgamma(h + 1.0) * acc;
}

bool near_ledger(const ProblemSpec& sp, cplx tau) {
  for (int k = -2; k < 80; ++k) {
    const cplx p = sp.a * std::pow(sp.q, double(k));
    if (std::abs(tau - p) < 0.05 * std::abs(p)) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("initial coefficients are the initial data") {
  auto sp = std::make_shared<const ProblemSpec>(fixtures::example_spec());
  CoefficientTable t(sp);
  Gen g(1);
  for (int k = 0; k < 20; ++k) {
    const cplx eps = g.polar(0.01, 1), tau = g.polar(0.01, 5);
    if (near_ledger(*sp, tau)) continue;
    CHECK(std::abs(eval_W(*t.get(0), eps, tau) - 1.0) < 1e-15);
    CHECK(std::abs(eval_W(*t.get(1), eps, tau) - 1.0 / (sp->a - tau)) < 1e-14);
    // W_2 = q^{-1} / ((a - tau)(a - tau / q)) by hand.
    const cplx w2 = 2.0 / ((sp->a - tau) * (sp->a - 2.0 * tau));
    CHECK(std::abs(eval_W(*t.get(2), eps, tau) - w2) < 1e-13 * (1 + std::abs(w2)));
  }
}

TEST_CASE("term engine matches the direct numeric recursion") {
  for (const auto& spec : {fixtures::example_spec(), rich_spec()}) {
    auto sp = std::make_shared<const ProblemSpec>(spec);
    CoefficientTable t(sp);
    Gen g(2);
    for (int beta = 0; beta <= 9; ++beta) {
      for (int k = 0; k < 6; ++k) {
        const cplx eps = g.polar(0.05, 0.8);
        cplx tau = g.polar(0.02, 3);
        while (near_ledger(*sp, tau)) tau = g.polar(0.02, 3);
        const cplx want = brute_W(*sp, beta, eps, tau);
        const cplx got = eval_W(*t.get(beta), eps, tau);
        CHECK(std::abs(got - want) <= 1e-10 * (1 + std::abs(want)));
      }
    }
  }
}

TEST_CASE("memoized and uncached construction agree term by term") {
  auto sp = std::make_shared<const ProblemSpec>(rich_spec());
  CoefficientTable t(sp);
  for (int beta = 0; beta <= 8; ++beta) {
    const auto fresh = build_coefficient(sp, beta);
    const auto& memo = *t.get(beta);
    REQUIRE(fresh.terms.size() == memo.terms.size());
    for (std::size_t i = 0; i < fresh.terms.size(); ++i) CHECK(fresh.terms[i] == memo.terms[i]);
    CHECK(fresh.pole_ks == memo.pole_ks);
    CHECK(std::is_sorted(memo.terms.begin(), memo.terms.end(), term_key_less));
    std::ostringstream a, b;
    dump_coefficient(fresh, a);
    dump_coefficient(memo, b);
    const std::string text = a.str();
    CHECK(text == b.str());
    CHECK(std::count(text.begin(), text.end(), '\n') == long(fresh.terms.size()));
  }
}

TEST_CASE("singularity ledger of the example") {
  auto sp = std::make_shared<const ProblemSpec>(fixtures::example_spec());
  CoefficientTable t(sp);
  CHECK(t.get(0)->pole_ks.empty());
  for (int beta = 1; beta <= 15; ++beta) {
    std::vector<int> want(beta);
    for (int k = 0; k < beta; ++k) want[k] = k;
    CHECK(t.get(beta)->pole_ks == want);
    CHECK(singularity_ledger(*sp, beta, &t) == singularity_ledger(*sp, beta));
  }
  const cplx p = t.get(3)->singularities[2];
  CHECK_THROWS_AS(eval_W(*t.get(3), 0.1, p + 1e-12), SingularityError);
  CHECK_THROWS_AS(eval_W(*t.get(3), 0.0, 0.5), DomainError);
  CHECK_THROWS_AS(t.get(-1), DomainError);
}

TEST_CASE("holomorphy rows: min pole modulus dominates Rhat") {
  auto sp = std::make_shared<const ProblemSpec>(fixtures::example_spec());
  CoefficientTable t(sp);
  const auto rows = holomorphy_check(t, fixtures::example_schedule(), 40);
  REQUIRE(rows.size() == 41);
  for (const auto& r : rows) {
    CHECK(r.pass);
    if (r.beta > 0) CHECK(r.min_modulus == doctest::Approx(std::pow(0.5, r.beta - 1)));
  }
  // Rhat0 above |a| breaks the plateau rows.
  const RadiusSchedule big(0.5, 1.0, 1.5, 1.0, 1.5, 2, 0.5);
  const auto bad = holomorphy_check(t, big, 5);
  CHECK_FALSE(bad[1].pass);
}

TEST_CASE("ray growth bound dominates |W| along rays") {
  for (const auto& spec : {fixtures::example_spec(), rich_spec()}) {
    auto sp = std::make_shared<const ProblemSpec>(spec);
    CoefficientTable t(sp);
    Gen g(9);
    for (int beta = 0; beta <= 8; ++beta) {
      const double arg_a = std::arg(sp->a);
      const double gamma = arg_a + (g.unit() < 0.5 ? 1 : -1) * g.uniform(0.2, 1.2);
      const double dist = std::abs(sp->a) * std::sin(std::min(std::abs(gamma - arg_a), 1.5));
      const cplx eps = g.polar(0.05, 0.5);
      const auto gb = ray_growth_bound(*t.get(beta), eps, dist);
      for (int k = 0; k < 30; ++k) {
        const double s = g.log_uniform(1e-3, 50);
        const cplx tau = std::polar(s, gamma);
        const double w = std::abs(eval_W(*t.get(beta), eps, tau));
        CHECK(w <= gb.K * std::pow(1 + s, gb.P) * (1 + 1e-12));
      }
    }
  }
}

TEST_CASE("series residual vanishes order by order") {
  auto sp = std::make_shared<const ProblemSpec>(rich_spec());
  CoefficientTable t(sp);
  Gen g(4);
  for (int k = 0; k < 10; ++k) {
    const cplx eps = g.polar(0.05, 0.8);
    cplx tau = g.polar(0.02, 3);
    while (near_ledger(*sp, tau)) tau = g.polar(0.02, 3);
    const auto rows = series_residual(t, 10, eps, tau);
    CHECK(rows.size() == 8);
    for (const auto& r : rows) CHECK(r.residual < 1e-12);
  }
  CHECK_THROWS_AS(series_residual(t, 2, 0.1, 0.3), OrderError);
}

TEST_CASE("term cap raises ResourceError") {
  auto sp = std::make_shared<const ProblemSpec>(rich_spec());
  CoefficientTable t(sp, 3);
  CHECK_THROWS_AS(t.get(9), ResourceError);
}
