#include "qgevrey/qgevrey_asymptotics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace qgevrey {

namespace {

double log_sum_exp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  std::vector<double> e(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) e[i] = std::exp(v[i] - m);
  return m + std::log(pairwise_sum(e));
}

std::vector<double> refine_geometric(const std::vector<double>& g) {
  std::vector<double> out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.push_back(g[i]);
    if (i + 1 < g.size()) out.push_back(std::sqrt(g[i] * g[i + 1]));
  }
  return out;
}

}  // namespace

void DirichletParams::validate() const {
  if (!(D1 > 0) || !(A1 > 0) || !(d2 > 0)) throw ValidationError("Dirichlet: D1, A1, d2 must be positive");
  if (!(D2 > 1)) throw HypothesisError("Dirichlet: D2 must exceed 1");
  if (!(q > 0 && q < 1)) throw ValidationError("Dirichlet: q must lie in (0, 1)");
}

double DirichletParams::log_term(double beta, double eps) const {
  return beta * std::log(D1) + A1 * beta * beta * std::log(q) - D2 * std::pow(q, d2 * beta) / eps;
}

DirichletSum dirichlet_direct(const DirichletParams& p, double eps, double tol, int term_cap) {
  p.validate();
  if (!(eps > 0)) throw DomainError("dirichlet_direct: eps must be positive");
  const double lq = std::log(p.q), l1 = std::log(p.D1);
  std::vector<double> logs;
  DirichletSum r;
  for (int b = 0;; ++b) {
    if (b >= term_cap) throw ResourceError("dirichlet_direct: tolerance unreachable within term cap");
    logs.push_back(p.log_term(b, eps));
    const bool ratio_ok = l1 + p.A1 * (2 * b + 1) * lq < -std::log(2.0);
    if (!ratio_ok) continue;
    // majorant of the tail: 2 D1^{b+1} q^{A1 (b+1)^2}
    const double lmaj = std::log(2.0) + (b + 1) * l1 + p.A1 * (b + 1.0) * (b + 1.0) * lq;
    const double ls = log_sum_exp(logs);
    if (lmaj - ls <= std::log(tol)) {
      r.log_sum = ls;
      r.sum = std::exp(ls);
      r.terms_used = b + 1;
      r.tail_bound = std::exp(lmaj - ls);
      return r;
    }
  }
}

int euler_maclaurin_cutoff(const DirichletParams& p, double eps, double tol) {
  const auto d = dirichlet_direct(p, eps);
  int n = std::max(1, d.terms_used);
  while (p.log_term(n, eps) - d.log_sum > std::log(tol)) ++n;
  return n;
}

EulerMaclaurin dirichlet_euler_maclaurin(const DirichletParams& p, double eps, int n) {
  p.validate();
  if (!(eps > 0)) throw DomainError("dirichlet_euler_maclaurin: eps must be positive");
  if (n < 1) throw ValidationError("dirichlet_euler_maclaurin: cutoff must be >= 1");
  const double lq = std::log(p.q), l1 = std::log(p.D1);
  auto f = [&](double t) { return std::exp(p.log_term(t, eps)); };
  auto fp = [&](double t) {
    return f(t) * (l1 + 2 * p.A1 * t * lq + p.D2 * p.d2 * (-lq) * std::pow(p.q, p.d2 * t) / eps);
  };
  std::vector<double> fint(n), corr(n), afp(n);
  for (int k = 0; k < n; ++k) {
    const double a = k, b = k + 1;
    fint[k] = gauss_panel<double>(f, a, b, 24);
    corr[k] = gauss_panel<double>([&](double t) { return (t - a - 0.5) * fp(t); }, a, b, 24);
    afp[k] = gauss_panel<double>([&](double t) { return std::abs(fp(t)); }, a, b, 24);
  }
  EulerMaclaurin em;
  em.endpoint = 0.5 * (f(0) + f(n));
  em.integral = pairwise_sum(fint);
  em.correction = pairwise_sum(corr);
  em.abs_fprime = pairwise_sum(afp);
  em.value = em.endpoint + em.integral + em.correction;
  return em;
}

double dirichlet_log_envelope(const DirichletParams& p, double Delta, double eps) {
  const double l = std::log(eps);
  return -(p.A1 / (p.d2 * p.d2 * Delta)) * l * l / (2 * (-std::log(p.q)));
}

double dirichlet_envelope_E1(const DirichletParams& p, double Delta, const std::vector<double>& eps) {
  double m = -std::numeric_limits<double>::infinity();
  for (double e : eps) m = std::max(m, dirichlet_direct(p, e).log_sum - dirichlet_log_envelope(p, Delta, e));
  return std::exp(m);
}

DirichletBoundReport dirichlet_bound_check(const DirichletParams& p, double Delta,
                                           const std::vector<double>& eps_grid) {
  if (!(Delta > 1)) throw HypothesisError("Delta must exceed 1");
  p.validate();
  if (eps_grid.size() < 10) throw ValidationError("dirichlet_bound_check: need at least 10 grid points");
  for (double e : eps_grid)
    if (!(e > 0 && e <= 0.5)) throw ValidationError("dirichlet_bound_check: grid must lie in (0, 0.5]");
  std::vector<double> g = eps_grid;
  std::sort(g.begin(), g.end(), std::greater<double>());
  DirichletBoundReport r;
  auto stable = [&](const std::vector<double>& grid, double* E, double* Er) {
    *E = dirichlet_envelope_E1(p, Delta, grid);
    *Er = dirichlet_envelope_E1(p, Delta, refine_geometric(grid));
    return std::isfinite(*E) && std::abs(*Er - *E) / *E < 0.1;
  };
  r.pass = stable(g, &r.E1, &r.E1_refined);
  r.rel_change = std::abs(r.E1_refined - r.E1) / r.E1;
  for (std::size_t m = 2; m <= g.size(); ++m) {
    double E, Er;
    if (!stable(std::vector<double>(g.begin(), g.begin() + m), &E, &Er)) break;
    r.stable_prefix = static_cast<int>(m);
  }
  return r;
}

TypeFit fit_flat_type_log(const std::vector<double>& log_eps, const std::vector<double>& log_v,
                          double q) {
  if (log_eps.size() != log_v.size()) throw ValidationError("fit_flat_type: size mismatch");
  if (!(q > 0 && q < 1)) throw ValidationError("fit_flat_type: q must lie in (0, 1)");
  TypeFit fit;
  std::vector<double> xs, ys, le;
  for (std::size_t i = 0; i < log_v.size(); ++i) {
    if (std::isnan(log_v[i])) throw DataError("fit_flat_type: NaN sample");
    if (log_v[i] == -std::numeric_limits<double>::infinity()) {
      ++fit.dropped;
      continue;
    }
    xs.push_back(-log_eps[i] * log_eps[i] / (2 * (-std::log(q))));
    ys.push_back(log_v[i]);
    le.push_back(log_eps[i]);
  }
  if (xs.size() < 8) throw ValidationError("fit_flat_type: need at least 8 nonzero samples");
  const auto [mn, mx] = std::minmax_element(le.begin(), le.end());
  if ((*mx - *mn) / std::log(10.0) < 2 - 1e-9)
    throw ValidationError("fit_flat_type: samples must span at least 2 decades");
  const Eigen::Index n = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    A(i, 0) = xs[i];
    A(i, 1) = 1.0;
    y(i) = ys[i];
  }
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(y);
  fit.slope = c(0);
  fit.intercept = c(1);
  const double ybar = y.mean();
  const double ss_tot = (y.array() - ybar).square().sum();
  const double ss_res = (A * c - y).squaredNorm();
  fit.r_squared = ss_tot > 0 ? std::clamp(1 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
  const double xmax = A.col(0).cwiseAbs().maxCoeff();
  const double slope_tol = 1e-10 * (1 + y.cwiseAbs().maxCoeff()) / xmax;
  if (fit.slope > slope_tol) {
    fit.flat = true;
    fit.fitted_type = 1 / fit.slope;
  } else {
    fit.fitted_type = std::numeric_limits<double>::infinity();
  }
  return fit;
}

TypeFit fit_flat_type(const std::vector<std::pair<double, double>>& samples, double q) {
  std::vector<double> le, lv;
  for (const auto& [e, v] : samples) {
    if (!(e > 0)) throw DataError("fit_flat_type: |eps| must be positive");
    if (v < 0 || std::isnan(v)) throw DataError("fit_flat_type: values must be nonnegative");
    le.push_back(std::log(e));
    lv.push_back(v > 0 ? std::log(v) : -std::numeric_limits<double>::infinity());
  }
  return fit_flat_type_log(le, lv, q);
}

ExpansionReport check_expansion(const std::vector<std::pair<cplx, cplx>>& f_samples,
                                const std::vector<cplx>& coeffs, double A, double H, double C1,
                                double q) {
  if (coeffs.size() < 2) throw ValidationError("check_expansion: need at least 2 coefficients");
  if (f_samples.empty()) throw ValidationError("check_expansion: no samples");
  if (!(A > 0) || !(H > 0) || !(C1 > 0)) throw ValidationError("check_expansion: A, H, C1 must be positive");
  const int Nmax = static_cast<int>(coeffs.size()) - 1;
  ExpansionReport rep;
  rep.pass = true;
  std::vector<cplx> partial(f_samples.size(), cplx(0.0));
  for (int N = 0; N <= Nmax; ++N) {
    ExpansionRow row;
    row.N = N;
    row.pass = true;
    for (std::size_t i = 0; i < f_samples.size(); ++i) {
      const auto [eps, fv] = f_samples[i];
      partial[i] += coeffs[N] * ipow(eps, N);
      const double rem = std::abs(fv - partial[i]);
      // log of q^{-A N^2 / 2} |eps|^{N+1} / (N+1)!
      const double lunit = -A * N * double(N) / 2 * std::log(q) + (N + 1) * std::log(std::abs(eps)) -
                           std::lgamma(N + 2.0);
      row.max_remainder = std::max(row.max_remainder, rem);
      if (rem == 0) continue;
      const double lr = std::log(rem) - lunit;  // rem / unit
      row.max_ratio = std::max(row.max_ratio, std::exp(lr - std::log(C1) - N * std::log(H)));
      rep.C1_min = std::max(rep.C1_min, std::exp(lr - N * std::log(H)));
      if (N == 0) {
        if (lr > std::log(C1)) rep.H_min = std::numeric_limits<double>::infinity();
      } else {
        rep.H_min = std::max(rep.H_min, std::exp((lr - std::log(C1)) / N));
      }
    }
    row.pass = row.max_ratio <= 1.0;
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace qgevrey
