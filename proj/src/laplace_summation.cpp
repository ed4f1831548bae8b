#include "qgevrey/laplace_summation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "qgevrey/quadrature.hpp"
#include "qgevrey/weighted_norms.hpp"

namespace qgevrey {

namespace {

constexpr double kPi = std::numbers::pi;

// z^b / b!
cplx z_term(cplx z, int b) { return ipow(z, b) / std::tgamma(b + 1.0); }

// log of K (1+T)^P e^{-lambda T} 2 / lambda
double log_tail(const GrowthBound& g, double lambda, double T) {
  return std::log(g.K) + g.P * std::log1p(T) - lambda * T + std::log(2.0 / lambda);
}

std::vector<double> ray_breaks(double T, double lambda, double gamma, const QuadraturePlan& plan,
                               const std::vector<cplx>& poles) {
  const double cap = std::min(T / 16, 2.0 / lambda);
  const double w0 = std::max(T * plan.first_rel, 1e-300);
  const cplx dir = std::polar(1.0, gamma);
  auto pole_room = [&](double x) {
    double r = std::numeric_limits<double>::infinity();
    for (const auto& p : poles) r = std::min(r, std::abs(x * dir - p));
    return r;
  };
  std::vector<double> b{0.0};
  double x = 0.0, w = w0;
  while (x < T) {
    double width = std::min(w, cap);
    width = std::min(width, std::max(0.5 * pole_room(x), w0));
    x += width;
    if (x > T) x = T;
    b.push_back(x);
    if (static_cast<int>(b.size()) > plan.max_panels)
      throw ResourceError("laplace_ray: panel count exceeds max_panels");
    w = width * plan.grade;
  }
  return b;
}

}  // namespace

double ray_decay(double gamma, cplx t, cplx eps) {
  return (t * std::polar(1.0, gamma) / eps).real();
}

double ray_distance(cplx p, double gamma) {
  const cplx dir = std::polar(1.0, gamma);
  const double along = (p * std::conj(dir)).real();
  if (along <= 0) return std::abs(p);
  return std::abs((p * std::conj(dir)).imag());
}

LaplaceResult laplace_ray(const std::function<cplx(cplx)>& f, double gamma, cplx t, cplx eps,
                          const QuadraturePlan& plan, const GrowthBound& growth, double delta2,
                          const std::vector<cplx>& poles) {
  if (eps == cplx(0.0)) throw DomainError("laplace_ray: eps must be nonzero");
  const double lambda = ray_decay(gamma, t, eps);
  const double cosv = lambda / std::abs(t / eps);
  if (!(cosv > 0) || cosv < delta2)
    throw DivergenceError("laplace_ray: decay condition cos(gamma + arg(t/eps)) >= delta2 fails");
  for (const auto& p : poles)
    if (std::abs(angle_diff(std::arg(p), gamma)) < plan.pole_angle_tol)
      throw GeometryError("laplace_ray: ledger pole on the integration ray");
  LaplaceResult r;
  if (growth.K == 0) return r;

  double T = plan.t_max;
  if (T <= 0) {
    T = std::max(2.0 * growth.P, 1.0) / lambda;
    const double target = std::log(plan.tail_tol * growth.K / lambda);
    while (log_tail(growth, lambda, T) > target) T += 1.0 / lambda;
  }
  r.t_max = T;
  r.tail = T >= 2.0 * growth.P / lambda ? std::exp(log_tail(growth, lambda, T))
                                        : std::numeric_limits<double>::infinity();
  const cplx dir = std::polar(1.0, gamma);
  const cplx rate = t * dir / eps;
  auto integrand = [&](double s) { return f(s * dir) * std::exp(-rate * s); };
  const auto br = ray_breaks(T, lambda, gamma, plan, poles);
  const auto pr = integrate_panels<double>(integrand, br, plan.points);
  r.value = pr.value * dir;
  r.error = pr.error + r.tail;
  r.panels = static_cast<int>(br.size()) - 1;
  return r;
}

DerivativeCheck laplace_derivative_check(const std::function<cplx(cplx)>& f, double gamma, cplx t,
                                         cplx eps, double h, const QuadraturePlan& plan,
                                         const GrowthBound& growth) {
  if (!(h > 0)) throw ValidationError("laplace_derivative_check: step must be positive");
  auto F = [&](cplx tt) { return laplace_ray(f, gamma, tt, eps, plan, growth); };
  const auto p1 = F(t + h), m1 = F(t - h), p2 = F(t + h / 2), m2 = F(t - h / 2);
  const cplx d1 = (p1.value - m1.value) / (2 * h);
  const cplx d2 = (p2.value - m2.value) / h;
  DerivativeCheck c;
  c.finite_difference = (4.0 * d2 - d1) / 3.0;
  auto g = [&](cplx tau) { return (-tau / eps) * f(tau); };
  GrowthBound gg{growth.K / std::abs(eps), growth.P + 1};
  const auto tr = laplace_ray(g, gamma, t, eps, plan, gg);
  c.transform = tr.value;
  const double scale = std::abs(tr.value);
  const double diff = std::abs(c.finite_difference - c.transform);
  c.gap = scale > 0 ? diff / scale : (diff == 0 ? 0.0 : std::numeric_limits<double>::infinity());
  const double fd_err = 3.0 * std::max({p1.error, m1.error, p2.error, m2.error}) / h;
  const double quad_rel = scale > 0 ? (tr.error + fd_err) / scale : 0.0;
  c.threshold = std::max(1e-6, 10 * quad_rel);
  c.pass = c.gap < c.threshold;
  return c;
}

SectorialSolution::SectorialSolution(std::shared_ptr<CoefficientTable> table,
                                     const SectorGeometry& geom, int sector, int B_max,
                                     const QuadraturePlan& plan, double A1)
    : table_(std::move(table)), sector_(sector), B_max_(B_max), plan_(plan), A1_(A1),
      delta2_(geom.delta2) {
  if (sector < 0 || sector >= static_cast<int>(geom.gammas.size()))
    throw ValidationError("build_solution: sector index out of range");
  if (B_max < 0) throw ValidationError("build_solution: B_max must be nonnegative");
  gamma_ = geom.gammas[sector];
  const ProblemSpec& spec = table_->spec();
  // Every ledger pole a q^k has argument arg(a).
  if (std::abs(angle_diff(std::arg(spec.a), gamma_)) < plan.pole_angle_tol)
    throw GeometryError("build_solution: Laplace direction passes through the pole lattice");
}

LaplaceResult SectorialSolution::X(int beta, cplx eps, cplx t, int k0) const {
  const auto key = std::make_tuple(beta, k0, eps.real(), eps.imag(), t.real(), t.imag());
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  const auto coef = table_->get(beta);
  const ProblemSpec& spec = table_->spec();
  GrowthBound g = ray_growth_bound(*coef, eps, ray_distance(spec.a, gamma_));
  g.K *= std::pow(std::abs(eps), -k0);
  g.P += k0;
  auto f = [&](cplx tau) { return ipow(-tau / eps, k0) * eval_W(*coef, eps, tau); };
  const auto r = laplace_ray(f, gamma_, t, eps, plan_, g, delta2_, coef->singularities);
  std::lock_guard<std::mutex> lock(mutex_);
  cache_.emplace(key, r);
  return r;
}

SectorialSolution::Value SectorialSolution::eval(cplx eps, cplx t, cplx z) const {
  Value v;
  const double q = table_->spec().q;
  std::vector<cplx> terms;
  std::vector<double> scaled(B_max_ + 1);
  for (int b = 0; b <= B_max_; ++b) {
    const cplx x = X(b, eps, t).value;
    terms.push_back(x * z_term(z, b));
    scaled[b] = std::abs(x) * std::exp(-A1_ * b * double(b) * std::log(q));
  }
  v.value = pairwise_sum(terms);
  try {
    const BoundFit fit = fit_growth(scaled, 1.0);
    if (fit.degenerate && fit.C_amp == 1.0 && fit.C_rate == 1.0) {
      v.tail = 0.0;
    } else {
      double tail = 0.0;
      const double lz = std::log(std::abs(z));
      for (int b = B_max_ + 1; b <= B_max_ + 60; ++b)
        tail += std::exp(std::log(fit.C_amp) + b * (std::log(fit.C_rate) + lz) +
                         A1_ * b * double(b) * std::log(q));
      v.tail = z == cplx(0.0) ? 0.0 : tail;
    }
  } catch (const Error&) {
    v.tail = std::numeric_limits<double>::quiet_NaN();
  }
  return v;
}

cplx SectorialSolution::dz_at_zero(int j, cplx eps, cplx t) const {
  if (j > B_max_) throw OrderError("dz_at_zero: order above truncation");
  return X(j, eps, t).value;
}

std::shared_ptr<SectorialSolution> build_solution(std::shared_ptr<CoefficientTable> table,
                                                  const SectorGeometry& geom, int sector, int B_max,
                                                  const QuadraturePlan& plan, double A1) {
  return std::make_shared<SectorialSolution>(std::move(table), geom, sector, B_max, plan, A1);
}

ResidualReport pde_residual(const SectorialSolution& sol, const std::vector<ResidualSample>& samples,
                            int threads) {
  const ProblemSpec& spec = sol.table().spec();
  const int S = spec.S;
  const int B = sol.B_max();
  if (B < S + spec.max_k1() + spec.max_s() + 2)
    throw OrderError("pde_residual: B_max below S + max kappa1 + max s + 2");
  const int top = B - S;
  ResidualReport rep;
  rep.residuals.assign(samples.size(), 0.0);
  parallel_for(samples.size(), threads, [&](std::size_t n) {
    const auto& smp = samples[n];
    const cplx eps = smp.eps, t = smp.t, z = smp.z;
    std::vector<cplx> lhs, rhs;
    for (int k = 0; k <= top; ++k) {
      const cplx Lk = eps * sol.Xt(k + S, eps, t).value + spec.a * sol.X(k + S, eps, t).value;
      cplx Rk{0.0, 0.0};
      for (const auto& kap : spec.kappa) {
        const cplx t2 = std::pow(spec.q, kap.m1) * t;
        for (const auto& [s, bp] : kap.b) {
          if (s > k) continue;
          double ff = 1.0;
          for (int f = k - s + 1; f <= k; ++f) ff *= f;
          const cplx Y = sol.X(k - s + kap.k1, eps, t2, kap.k0).value;
          Rk += bp.eval(eps) * ff * std::pow(spec.q, kap.m2 * (k - s)) * Y;
        }
      }
      const cplx zk = z_term(z, k);
      lhs.push_back(Lk * zk);
      rhs.push_back(Rk * zk);
    }
    const cplx L = pairwise_sum(lhs), R = pairwise_sum(rhs);
    rep.residuals[n] = std::abs(L - R) / (1 + std::abs(L));
  });
  for (double r : rep.residuals) rep.max_residual = std::max(rep.max_residual, r);
  return rep;
}

CocycleFit fit_log2_decay(const std::vector<double>& eps_abs, const std::vector<double>& D) {
  if (eps_abs.size() != D.size()) throw ValidationError("fit_log2_decay: size mismatch");
  CocycleFit fit;
  fit.eps_abs = eps_abs;
  fit.D = D;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < D.size(); ++i) {
    if (!(D[i] > 1e-300)) {
      ++fit.dropped;
      continue;
    }
    const double l = std::log(eps_abs[i]);
    xs.push_back(-l * l);
    ys.push_back(std::log(D[i]));
  }
  if (xs.empty()) {
    fit.underflow = true;
    fit.c_hat = std::numeric_limits<double>::infinity();
    return fit;
  }
  if (xs.size() < 3) throw DataError("fit_log2_decay: fewer than 3 usable points");
  Eigen::MatrixXd A(xs.size(), 2);
  Eigen::VectorXd y(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    A(i, 0) = xs[i];
    A(i, 1) = 1.0;
    y(i) = ys[i];
  }
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(y);
  fit.c_hat = c(0);
  fit.intercept = c(1);
  return fit;
}

double cocycle_floor(double A1, double d2, double Delta, double q) {
  return A1 / (2 * d2 * d2 * Delta * (-std::log(q)));
}

cplx ray_difference(const BorelCoefficient& coef, double gamma_i, double gamma_j, cplx eps, cplx t,
                    int circle_points) {
  const double delta = angle_diff(gamma_j, gamma_i);
  if (delta == 0.0 || coef.terms.empty()) return cplx(0.0);
  const ProblemSpec& spec = *coef.spec;
  // The arc at infinity vanishes only if e^{-t tau/eps} decays on every direction swept.
  for (int k = 0; k <= 64; ++k)
    if (!(ray_decay(gamma_i + delta * k / 64, t, eps) > 0))
      throw DivergenceError("ray_difference: no decay on the swept sector");
  const double sgn = delta > 0 ? 1.0 : -1.0;
  cplx total{0.0, 0.0};
  for (std::size_t n = 0; n < coef.pole_ks.size(); ++n) {
    const cplx p = coef.singularities[n];
    const double th = angle_diff(std::arg(p), gamma_i);
    if (std::abs(th) < 1e-15 || std::abs(angle_diff(std::arg(p), gamma_j)) < 1e-15)
      throw GeometryError("ray_difference: pole on a ray");
    const bool inside = delta > 0 ? (th > 0 && th < delta) : (th < 0 && th > delta);
    if (!inside) continue;
    const int k = coef.pole_ks[n];
    const double r = std::min(0.4 * std::abs(spec.a) * std::pow(spec.q, k) * (1 - spec.q),
                              std::abs(eps) / std::abs(t));
    std::vector<cplx> vals(circle_points);
    for (int m = 0; m < circle_points; ++m) {
      const cplx u = std::polar(1.0, 2 * kPi * m / circle_points);
      const cplx tau = p + r * u;
      vals[m] = eval_W(coef, eps, tau) * std::exp(-t * tau / eps) * cplx(0.0, r) * u;
    }
    total += pairwise_sum(vals) * (2 * kPi / circle_points);
  }
  return -sgn * total;
}

CocycleFit cocycle_difference(const SectorialSolution& sol_i, const SectorialSolution& sol_j,
                              const std::vector<cplx>& eps_grid, const std::vector<cplx>& t_samples,
                              const std::vector<cplx>& z_samples, bool by_residues, int threads) {
  if (&sol_i.table() != &sol_j.table())
    throw ValidationError("cocycle_difference: solutions must share one coefficient table");
  if (eps_grid.empty() || t_samples.empty() || z_samples.empty())
    throw ValidationError("cocycle_difference: empty sample set");
  const int B = std::min(sol_i.B_max(), sol_j.B_max());
  std::vector<double> D(eps_grid.size(), 0.0), ea(eps_grid.size());
  parallel_for(eps_grid.size(), threads, [&](std::size_t n) {
    const cplx eps = eps_grid[n];
    ea[n] = std::abs(eps);
    double best = 0.0;
    for (const auto& t : t_samples) {
      std::vector<cplx> d(B + 1);
      for (int b = 0; b <= B; ++b) {
        if (sol_i.gamma() == sol_j.gamma()) {
          d[b] = 0.0;
        } else if (by_residues) {
          d[b] = ray_difference(*sol_i.table().get(b), sol_i.gamma(), sol_j.gamma(), eps, t);
        } else {
          d[b] = sol_j.X(b, eps, t).value - sol_i.X(b, eps, t).value;
        }
      }
      for (const auto& z : z_samples) {
        std::vector<cplx> terms(B + 1);
        for (int b = 0; b <= B; ++b)
          terms[b] = d[b] * z_term(z, b);
        best = std::max(best, std::abs(pairwise_sum(terms)));
      }
    }
    D[n] = best;
  });
  return fit_log2_decay(ea, D);
}

}  // namespace qgevrey
