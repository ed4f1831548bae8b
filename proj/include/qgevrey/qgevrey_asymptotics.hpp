#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "qgevrey/errors.hpp"
#include "qgevrey/quadrature.hpp"

namespace qgevrey {

// Sum_beta D1^beta q^{A1 beta^2} exp(-D2 q^{d2 beta} / eps)
struct DirichletParams {
  double D1 = 1.0;
  double D2 = 2.0;
  double A1 = 1.0;
  double d2 = 1.0;
  double q = 0.5;

  void validate() const;
  double log_term(double beta, double eps) const;
};

struct DirichletSum {
  double sum = 0.0;
  double log_sum = 0.0;  // stays finite when sum underflows
  int terms_used = 0;
  double tail_bound = 0.0;  // relative to sum
};

// Stops once D1 q^{A1(2 beta + 1)} < 1/2 and the geometric majorant of the tail is below
// tol relative to the partial sum.
DirichletSum dirichlet_direct(const DirichletParams& p, double eps, double tol = 1e-15,
                              int term_cap = 100000);

struct EulerMaclaurin {
  double value = 0.0;
  double endpoint = 0.0;    // (f(0) + f(n)) / 2
  double integral = 0.0;    // int_0^n f
  double correction = 0.0;  // int_0^n B1(t - floor t) f'(t) dt
  double abs_fprime = 0.0;  // int_0^n |f'|
};

// Sum_{beta=0}^{n} f(beta) written as the three-term identity; panels sit on the integers.
EulerMaclaurin dirichlet_euler_maclaurin(const DirichletParams& p, double eps, int n_cutoff);

// Smallest n with f(n) below tol relative to the direct sum.
int euler_maclaurin_cutoff(const DirichletParams& p, double eps, double tol = 1e-18);

// log of exp(-(A1 / (d2^2 Delta)) log^2(eps) / (2 (-log q)))
double dirichlet_log_envelope(const DirichletParams& p, double Delta, double eps);

// max over the grid of sum / envelope, for any Delta > 0 (no hypothesis gate).
double dirichlet_envelope_E1(const DirichletParams& p, double Delta, const std::vector<double>& eps);

struct DirichletBoundReport {
  double E1 = 0.0;
  double E1_refined = 0.0;  // on the grid with doubled density
  double rel_change = 0.0;
  bool pass = false;
  int stable_prefix = 0;  // largest leading grid segment (from the largest eps) that is stable
};

DirichletBoundReport dirichlet_bound_check(const DirichletParams& p, double Delta,
                                           const std::vector<double>& eps_grid);

struct TypeFit {
  double fitted_type = 0.0;  // +inf: not flat
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int dropped = 0;  // zero samples ignored
  bool flat = false;
};

// Regresses log v on -log^2|eps| / (2 (-log q)); fitted_type = 1 / slope.
TypeFit fit_flat_type(const std::vector<std::pair<double, double>>& samples, double q);
// Same fit from precomputed logs (for extended-precision data).
TypeFit fit_flat_type_log(const std::vector<double>& log_eps, const std::vector<double>& log_v,
                          double q);

struct ExpansionRow {
  int N = 0;
  double max_remainder = 0.0;
  double max_ratio = 0.0;  // remainder / envelope at the given (C1, H)
  bool pass = false;
};

struct ExpansionReport {
  std::vector<ExpansionRow> rows;
  double C1_min = 0.0;  // for the given H
  double H_min = 0.0;   // for the given C1; +inf if the N = 0 row already fails
  bool pass = false;
};

// |f(eps) - sum_{n<=N} f_n eps^n| <= C1 H^N q^{-A N^2 / 2} |eps|^{N+1} / (N+1)!
ExpansionReport check_expansion(const std::vector<std::pair<cplx, cplx>>& f_samples,
                                const std::vector<cplx>& coeffs, double A, double H, double C1,
                                double q);

// I(x) = int_0^b f(s) e^{-s/x} ds, integrated in u = log s on panels of width 0.25.
template <typename Real>
Real watson_integral(const std::function<Real(Real)>& f, Real b, Real x) {
  const Real lb = std::log(b);
  const Real lx = std::log(x);
  const Real hi = std::min(lb, lx + std::log(Real(2000)));
  const Real lo = std::min(hi, lx) - 60;
  std::vector<Real> br;
  for (Real u = lo; u < hi; u += Real(0.25)) br.push_back(u);
  br.push_back(hi);
  auto g = [&](Real u) {
    const Real s = std::exp(u);
    return f(s) * std::exp(-s / x) * s;
  };
  return integrate_panels<Real>(g, br, 24).value;
}

struct WatsonReport {
  std::vector<double> x;
  std::vector<double> log_I;
  TypeFit fit_f;
  TypeFit fit_I;
  double degradation = 0.0;  // type(I) / type(f) - 1
  bool zero = false;
  bool pass = false;
};

// Fits the flatness type of f and of its truncated Laplace integral I on a log-spaced grid.
template <typename Real>
WatsonReport watson_transfer(const std::function<Real(Real)>& f, Real b, double x_lo, double x_hi,
                             int n, double q, double tol = 0.15) {
  if (n < 8) throw ValidationError("watson_transfer: need at least 8 grid points");
  WatsonReport r;
  std::vector<double> lx, lf, lI;
  bool all_zero = true;
  for (int k = 0; k < n; ++k) {
    const Real x = Real(x_lo) * std::pow(Real(x_hi) / Real(x_lo), Real(k) / (n - 1));
    const Real I = watson_integral<Real>(f, b, x);
    const Real fx = f(x);
    if (I != 0) all_zero = false;
    r.x.push_back(static_cast<double>(x));
    r.log_I.push_back(I > 0 ? static_cast<double>(std::log(I))
                            : -std::numeric_limits<double>::infinity());
    lx.push_back(static_cast<double>(std::log(x)));
    lf.push_back(fx > 0 ? static_cast<double>(std::log(fx)) : -std::numeric_limits<double>::infinity());
    lI.push_back(r.log_I.back());
  }
  if (all_zero) {
    r.zero = true;
    r.pass = true;
    return r;
  }
  r.fit_f = fit_flat_type_log(lx, lf, q);
  r.fit_I = fit_flat_type_log(lx, lI, q);
  r.degradation = r.fit_I.fitted_type / r.fit_f.fitted_type - 1;
  r.pass = r.fit_f.flat && r.fit_I.flat && std::abs(r.degradation) <= tol;
  return r;
}

}  // namespace qgevrey
