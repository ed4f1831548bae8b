#include "qgevrey/cauchy_heine.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qgevrey/problem_model.hpp"
#include "qgevrey/quadrature.hpp"

namespace qgevrey {

namespace {

constexpr double kPi = std::numbers::pi;
const cplx kI{0.0, 1.0};

using Fn = std::function<cplx(cplx)>;

struct Accum {
  std::vector<cplx> parts;
  double error = 0.0;
  void add(const PathIntegral& p) {
    parts.push_back(p.value);
    error += p.error;
  }
  PathIntegral total() const { return {pairwise_sum(parts), error}; }
};

// Panel width in u = log|xi| so that each panel stays well inside the disc of
// analyticity around the 1/(xi - eps) pole.
double log_width(cplx xi, const cplx* avoid) {
  double w = 0.5;
  if (avoid) w = std::min(w, 0.5 * std::abs(xi - *avoid) / std::abs(xi));
  return std::max(w, 1e-6);
}

// int_0^R F(rho e^{i th}) e^{i th} d rho, integrated in u = log rho down to the cutoff
// where the integrand has decayed below 1e-18 of its peak.
PathIntegral radial_to_zero(const Fn& F, double th, double R, const cplx* avoid) {
  const cplx dir = std::polar(1.0, th);
  auto g = [&](double u) {
    const double rho = std::exp(u);
    return F(rho * dir) * dir * rho;
  };
  std::vector<cplx> vals;
  double err = 0.0, scale = 0.0, prev = std::numeric_limits<double>::infinity();
  int decreasing = 0;
  double u = std::log(R);
  for (;;) {
    if (u < -700) throw FlatnessError("integrand does not decay toward 0 (cocycle not flat)");
    const double w = log_width(std::exp(u) * dir, avoid);
    const double lo = u - w;
    const cplx hi_v = gauss_panel<double>(g, lo, u, 24);
    const cplx lo_v = gauss_panel<double>(g, lo, u, 20);
    if (!std::isfinite(hi_v.real()) || !std::isfinite(hi_v.imag()))
      throw FlatnessError("non-finite integrand near 0 (cocycle not flat)");
    vals.push_back(hi_v);
    err += std::abs(hi_v - lo_v);
    const double pm = std::max({std::abs(g(lo)), std::abs(g(u)), std::abs(hi_v) / w});
    scale = std::max(scale, pm);
    if (pm <= 1e-18 * scale && pm <= prev) {
      if (++decreasing >= 3) {
        err += 2 * pm;
        break;
      }
    } else {
      decreasing = 0;
    }
    prev = pm;
    u = lo;
  }
  std::reverse(vals.begin(), vals.end());
  return {pairwise_sum(vals), err};
}

// int_{R0}^{R1} F(rho e^{i th}) e^{i th} d rho (signed by the order of R0, R1).
PathIntegral radial_between(const Fn& F, double th, double R0, double R1, const cplx* avoid) {
  const double sgn = R1 >= R0 ? 1.0 : -1.0;
  double a = std::log(std::min(R0, R1)), b = std::log(std::max(R0, R1));
  const cplx dir = std::polar(1.0, th);
  auto g = [&](double u) {
    const double rho = std::exp(u);
    return F(rho * dir) * dir * rho;
  };
  std::vector<cplx> vals;
  double err = 0.0;
  for (double u = a; u < b;) {
    const double w = std::min(b - u, log_width(std::exp(u) * dir, avoid));
    const cplx h = gauss_panel<double>(g, u, u + w, 24);
    err += std::abs(h - gauss_panel<double>(g, u, u + w, 20));
    vals.push_back(h);
    u += w;
  }
  return {sgn * pairwise_sum(vals), err};
}

// int over xi = c + rho e^{i phi}, phi from p0 to p1.
PathIntegral arc(const Fn& F, cplx c, double rho, double p0, double p1, const cplx* avoid) {
  double dphi = kPi / 8;
  if (avoid) {
    double dmin = std::abs(rho - std::abs(*avoid - c));
    dphi = std::min(dphi, 0.5 * dmin / rho);
  }
  const int n = std::max(1, static_cast<int>(std::ceil(std::abs(p1 - p0) / dphi)));
  auto g = [&](double phi) {
    const cplx e = std::polar(1.0, phi);
    return F(c + rho * e) * kI * rho * e;
  };
  std::vector<cplx> vals;
  double err = 0.0;
  for (int k = 0; k < n; ++k) {
    const double a = p0 + (p1 - p0) * k / n, b = p0 + (p1 - p0) * (k + 1) / n;
    const cplx h = gauss_panel<double>(g, a, b, 24);
    err += std::abs(h - gauss_panel<double>(g, a, b, 20));
    vals.push_back(h);
  }
  return {pairwise_sum(vals), err};
}

double segment_distance(cplx p, double th, double r) {
  const cplx dir = std::polar(1.0, th);
  const double s = std::clamp((p * std::conj(dir)).real(), 0.0, r);
  return std::abs(p - s * dir);
}

// Position of eps inside the counterclockwise arc (theta_{l-1}, theta_l): 0 < pos < width.
bool in_sector(const CocycleData& d, int l, cplx eps) {
  const int lm = (l - 1 + d.nu) % d.nu;
  const double width = canonical_angle(d.theta[l] - d.theta[lm]);
  const double pos = canonical_angle(std::arg(eps) - d.theta[lm]);
  return pos > 0 && pos < (width == 0 ? 2 * kPi : width);
}

// Outward C_h integral with the segment bent around eps; side = +1 bends to higher angles.
PathIntegral bent_segment(const Fn& F, double th, double r, cplx eps, int side) {
  const cplx dir = std::polar(1.0, th);
  const double sc = (eps * std::conj(dir)).real();
  const cplx c = sc * dir;
  const double rho = std::min(r / 4, 0.9 * std::min(sc, r - sc));
  if (!(sc > 0 && sc < r) || !(rho > 1.2 * std::abs(eps - c)))
    throw GeometryError("coboundary: bend cannot avoid eps (too close to an endpoint)");
  Accum acc;
  acc.add(radial_to_zero(F, th, sc - rho, &eps));
  // outward: arrive at c - rho dir, arc over to c + rho dir on the chosen side
  acc.add(arc(F, c, rho, th + kPi, th + kPi - side * kPi, &eps));
  acc.add(radial_between(F, th, sc + rho, r, &eps));
  return acc.total();
}

PathIntegral heine_sum(const CocycleData& d, cplx eps, int bent, int side) {
  Accum acc;
  for (int h = 0; h < d.nu; ++h) {
    if (d.zero(h)) continue;
    const Fn& D = d.delta[h];
    Fn F = [&](cplx xi) { return D(xi) / (xi - eps); };
    acc.add(h == bent ? bent_segment(F, d.theta[h], d.r, eps, side)
                      : radial_to_zero(F, d.theta[h], d.r, &eps));
  }
  // -1/(2 pi i) times the inward integral equals +1/(2 pi i) times the outward one.
  PathIntegral t = acc.total();
  return {t.value / (2 * kPi * kI), t.error / (2 * kPi)};
}

// Outward moment path: radial along th + w to r/2, arc back to th, radial to r.
PathIntegral rotated_segment(const Fn& F, double th, double r, double w) {
  if (w == 0) return radial_to_zero(F, th, r, nullptr);
  Accum acc;
  acc.add(radial_to_zero(F, th + w, r / 2, nullptr));
  acc.add(arc(F, cplx(0.0), r / 2, th + w, th, nullptr));
  acc.add(radial_between(F, th, r / 2, r, nullptr));
  return acc.total();
}

}  // namespace

void CocycleData::validate() const {
  if (nu < 2) throw ValidationError("cocycle: need at least 2 sectors");
  if (static_cast<int>(theta.size()) != nu || static_cast<int>(delta.size()) != nu ||
      static_cast<int>(K.size()) != nu)
    throw ValidationError("cocycle: theta, delta and K must have nu entries");
  if (!(r > 0) || !(L > 0) || !(q > 0 && q < 1)) throw ValidationError("cocycle: r, L > 0 and q in (0, 1)");
  for (int l = 0; l < nu; ++l) {
    const int ln = (l + 1) % nu;
    if (!(canonical_angle(theta[ln] - theta[l]) > 0)) throw ValidationError("cocycle: repeated segment direction");
  }
}

CocycleData gaussian_cocycle(double L, double q, double r, double eta) {
  CocycleData d;
  d.nu = 2;
  d.theta = {0.0, kPi};
  d.r = r;
  d.L = L;
  d.q = q;
  d.overlap_half_width = eta;
  const double c = -std::log(q);
  d.delta = {[L, c](cplx xi) {
               const cplx l = std::log(xi);
               return std::exp(-l * l / (2 * c * L));
             },
             Fn()};
  d.K = {0.0, 0.0};
  d.K[0] = measure_flatness_amplitude(d, 0);
  return d;
}

PathIntegral heine_primitive_with_error(const CocycleData& data, int l, cplx eps, double exclusion) {
  data.validate();
  if (l < 0 || l >= data.nu) throw ValidationError("heine_primitive: sector index out of range");
  for (int h = 0; h < data.nu; ++h)
    if (segment_distance(eps, data.theta[h], data.r) < exclusion * data.r)
      throw GeometryError("heine_primitive: eps lies on a segment");
  if (!in_sector(data, l, eps)) throw GeometryError("heine_primitive: eps outside sector E~_l");
  return heine_sum(data, eps, -1, 0);
}

cplx heine_primitive(const CocycleData& data, int l, cplx eps, double exclusion) {
  return heine_primitive_with_error(data, l, eps, exclusion).value;
}

CoboundaryReport coboundary_check(const CocycleData& data, int l, const std::vector<cplx>& eps_grid,
                                  int threads) {
  data.validate();
  CoboundaryReport rep;
  rep.eps = eps_grid;
  rep.gaps.assign(eps_grid.size(), 0.0);
  rep.error_estimates.assign(eps_grid.size(), 0.0);
  if (data.zero(l) && std::all_of(data.delta.begin(), data.delta.end(), [](const Fn& f) { return !f; }))
    return rep;
  parallel_for(eps_grid.size(), threads, [&](std::size_t n) {
    const cplx eps = eps_grid[n];
    // Psi_l continued across C_l: eps must stay on the lower-angle side, so bend upward.
    const PathIntegral lo = heine_sum(data, eps, l, +1);
    const PathIntegral hi = heine_sum(data, eps, l, -1);
    const cplx d = data.zero(l) ? cplx(0.0) : data.delta[l](eps);
    rep.gaps[n] = std::abs(hi.value - lo.value - d);
    rep.error_estimates[n] = hi.error + lo.error;
  });
  for (double g : rep.gaps) rep.max_gap = std::max(rep.max_gap, g);
  return rep;
}

double coefficient_envelope(const CocycleData& data, int l, int m) {
  const double c = -std::log(data.q);
  return std::sqrt(2 * data.L * c) * data.K[l] / (2 * std::sqrt(kPi)) *
         std::exp(data.L * m * double(m) / 2 * c);
}

std::vector<TaylorCoefficient> taylor_coefficients(const CocycleData& data, int l, int m_max) {
  data.validate();
  if (m_max < 1) throw ValidationError("taylor_coefficients: m_max must be >= 1");
  std::vector<TaylorCoefficient> out;
  for (int m = 0; m <= m_max; ++m) {
    TaylorCoefficient t;
    t.m = m;
    t.envelope = coefficient_envelope(data, l, m);
    if (!data.zero(l)) {
      const Fn& D = data.delta[l];
      Fn F = [&](cplx xi) { return D(xi) * std::exp(-(m + 1.0) * std::log(xi)); };
      const PathIntegral p = radial_to_zero(F, data.theta[l], data.r, nullptr);
      t.alpha = p.value / (2 * kPi * kI);
      t.error = p.error / (2 * kPi);
    }
    t.ratio = std::abs(t.alpha) / t.envelope;
    out.push_back(t);
  }
  return out;
}

double measure_flatness_amplitude(const CocycleData& data, int l, int radial, int angular) {
  if (data.zero(l)) return 0.0;
  const double c = -std::log(data.q);
  double K = 0.0;
  for (int i = 0; i < radial; ++i) {
    const double rho = data.r * std::pow(1e-4, 1.0 - double(i) / (radial - 1));
    const double lr = std::log(rho);
    for (int j = 0; j < angular; ++j) {
      const double phi =
          data.theta[l] + data.overlap_half_width * (2.0 * j / std::max(1, angular - 1) - 1.0);
      const double v = std::abs(data.delta[l](std::polar(rho, phi)));
      K = std::max(K, v * std::exp(lr * lr / (2 * data.L * c)));
    }
  }
  return K;
}

TypeFit cocycle_flatness(const CocycleData& data, int l) {
  if (data.zero(l)) throw DataError("cocycle_flatness: zero overlap function");
  std::vector<std::pair<double, double>> s;
  for (int i = 0; i < 12; ++i) {
    const double rho = data.r * std::pow(10.0, -4.0 + 3.0 * i / 11);
    s.emplace_back(rho, std::abs(data.delta[l](std::polar(rho, data.theta[l]))));
  }
  return fit_flat_type(s, data.q);
}

ReconstructReport reconstruct_expansion(const CocycleData& data, int m_max,
                                        const std::vector<std::vector<cplx>>& eps_grids,
                                        double L_hat_factor, double w) {
  data.validate();
  if (m_max < 2 || m_max > 12) throw ValidationError("reconstruct_expansion: m_max must lie in [2, 12]");
  if (static_cast<int>(eps_grids.size()) != data.nu)
    throw ValidationError("reconstruct_expansion: one eps grid per sector");
  ReconstructReport rep;
  rep.L_hat = L_hat_factor * data.L;
  const double lq = -std::log(data.q);
  for (int l = 0; l < data.nu; ++l) {
    SectorExpansion se;
    se.sector = l;
    const int lm = (l - 1 + data.nu) % data.nu;
    for (int m = 0; m <= m_max; ++m) {
      Accum acc;
      for (int h = 0; h < data.nu; ++h) {
        if (data.zero(h)) continue;
        const double rot = h == l ? -w : (h == lm ? w : 0.0);
        const Fn& D = data.delta[h];
        Fn F = [&](cplx xi) { return D(xi) * std::exp(-(m + 1.0) * std::log(xi)); };
        acc.add(rotated_segment(F, data.theta[h], data.r, rot));
      }
      const PathIntegral p = acc.total();
      se.phi.push_back(p.value / (2 * kPi * kI));
      se.phi_error.push_back(p.error / (2 * kPi));
    }
    // G_l = Psi_l + 1/(1 - eps), whose expansion coefficients are phi_m + 1.
    std::vector<std::pair<cplx, cplx>> samples;
    for (const auto& e : eps_grids[l]) {
      const cplx G = heine_primitive(data, l, e) + 1.0 / (1.0 - e);
      samples.emplace_back(e, G);
    }
    std::vector<cplx> coeffs;
    for (const auto& p : se.phi) coeffs.push_back(p + 1.0);
    for (int M = 1; M <= m_max + 1; ++M) {
      double best = 0.0;
      for (const auto& [e, G] : samples) {
        cplx s{0.0, 0.0};
        for (int m = 0; m < M; ++m) s += coeffs[m] * ipow(e, m);
        best = std::max(best, std::abs(G - s) / std::pow(std::abs(e), M));
      }
      se.remainder.push_back(best);
    }
    // log R_M = a + b (M-1) + kappa (M-1)^2, L_measured = 2 kappa / (-log q)
    const int n = static_cast<int>(se.remainder.size());
    Eigen::MatrixXd A(n, 3);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      A(i, 0) = 1;
      A(i, 1) = i;
      A(i, 2) = double(i) * i;
      y(i) = std::log(std::max(se.remainder[i], 1e-300));
    }
    const Eigen::VectorXd c = A.colPivHouseholderQr().solve(y);
    se.L_measured = 2 * c(2) / lq;
    se.feasible = se.L_measured <= rep.L_hat;
    se.expansion = check_expansion(samples, coeffs, rep.L_hat, 1.0, 1.0, data.q);
    rep.sectors.push_back(std::move(se));
  }
  double tol_violation = 0.0;
  for (int l = 1; l < data.nu; ++l) {
    for (int m = 0; m <= m_max; ++m) {
      const cplx a = rep.sectors[0].phi[m], b = rep.sectors[l].phi[m];
      const double scale = std::max(1.0, std::abs(a));
      const double gap = std::abs(a - b) / scale;
      rep.max_coefficient_gap = std::max(rep.max_coefficient_gap, gap);
      const double bars = 10 * (rep.sectors[0].phi_error[m] + rep.sectors[l].phi_error[m]) / scale;
      if (gap > std::max(1e-6, bars)) tol_violation = std::max(tol_violation, gap);
    }
  }
  if (tol_violation > 0)
    throw CocycleInconsistency("reconstruct_expansion: sector coefficients disagree, relative gap " +
                               std::to_string(tol_violation));
  rep.shared = rep.max_coefficient_gap <= 1e-6;
  rep.feasible = std::all_of(rep.sectors.begin(), rep.sectors.end(),
                             [](const SectorExpansion& s) { return s.feasible; });
  return rep;
}

}  // namespace qgevrey
