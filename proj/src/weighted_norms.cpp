#include "qgevrey/weighted_norms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace qgevrey {

namespace {

struct Sample {
  double value;
  cplx tau;
  int skipped;
  int size;
};

// Radii r_lo * (r_hi/r_lo)^(k/nr), k = 0..nr; angles per `full_circle`.
template <typename Weight>
Sample sample_grid(const BorelCoefficient& coef, cplx eps, double r_lo, double r_hi, int nr,
                   double th_lo, double th_hi, int na, bool full_circle, const Weight& weight) {
  Sample s{0.0, cplx(r_lo, 0.0), 0, 0};
  const double excl = default_exclusion(*coef.spec);
  const double lr = std::log(r_hi / r_lo);
  for (int i = 0; i <= nr; ++i) {
    const double r = r_lo * std::exp(lr * i / nr);
    const double w = weight(r);
    const int n_ang = full_circle ? na : na + 1;
    for (int j = 0; j < n_ang; ++j) {
      const double th = full_circle ? 2 * std::numbers::pi * j / na
                                    : (na == 0 ? th_lo : th_lo + (th_hi - th_lo) * j / na);
      const cplx tau = std::polar(r, th);
      ++s.size;
      double v;
      try {
        v = std::abs(eval_W(coef, eps, tau, excl)) * w;
      } catch (const SingularityError&) {
        ++s.skipped;
        continue;
      }
      if (v > s.value) {
        s.value = v;
        s.tau = tau;
      }
    }
  }
  return s;
}

// Pattern search around the best grid point; only adds samples, so the value can only grow.
template <typename Weight>
void polish(const BorelCoefficient& coef, cplx eps, double r_lo, double r_hi, double th_lo,
            double th_hi, bool full, double dlr, double dth, const Weight& weight, Sample& best) {
  if (!(best.value > 0)) return;
  const double excl = default_exclusion(*coef.spec);
  const double llo = std::log(r_lo), lhi = std::log(r_hi);
  double lr0 = std::log(std::abs(best.tau));
  double th0 = std::arg(best.tau);
  if (!full) th0 = std::clamp(th_lo + canonical_angle(th0 - th_lo), th_lo, th_hi);
  for (int it = 0; it < 16; ++it) {
    double lr_best = lr0, th_best = th0;
    for (int i = -4; i <= 4; ++i) {
      const double lr = std::clamp(lr0 + dlr * i / 4, llo, lhi);
      const double w = weight(std::exp(lr));
      for (int j = -4; j <= 4; ++j) {
        double th = th0 + dth * j / 4;
        if (!full) th = std::clamp(th, th_lo, th_hi);
        const cplx tau = std::polar(std::exp(lr), th);
        double v;
        try {
          v = std::abs(eval_W(coef, eps, tau, excl)) * w;
        } catch (const SingularityError&) {
          continue;
        }
        if (v > best.value) {
          best.value = v;
          best.tau = tau;
          lr_best = lr;
          th_best = th;
        }
      }
    }
    lr0 = lr_best;
    th0 = th_best;
    dlr /= 2;
    dth /= 2;
  }
}

template <typename Weight>
NormEstimate refine(const BorelCoefficient& coef, cplx eps, double r_lo, double r_hi, double th_lo,
                    double th_hi, bool full, const NormGrid& g, const Weight& weight) {
  NormEstimate est;
  est.beta = coef.beta;
  est.eps = eps;
  if (coef.terms.empty()) {
    est.grid_size = 1;
    return est;
  }
  int nr = g.radial, na = g.angular;
  Sample prev = sample_grid(coef, eps, r_lo, r_hi, nr, th_lo, th_hi, na, full, weight);
  int level = 0;
  for (; level < g.max_refinements; ++level) {
    nr *= 2;
    na *= 2;
    Sample cur = sample_grid(coef, eps, r_lo, r_hi, nr, th_lo, th_hi, na, full, weight);
    const double change = std::abs(cur.value - prev.value) / std::max(cur.value, 1e-300);
    prev = cur;
    if (change < g.rel_tol) {
      ++level;
      break;
    }
  }
  if (prev.skipped == prev.size) throw DomainError("norm grid: every sample hit the pole guard");
  const double dth = full ? 2 * std::numbers::pi / na : (th_hi - th_lo) / std::max(na, 1);
  polish(coef, eps, r_lo, r_hi, th_lo, th_hi, full, std::log(r_hi / r_lo) / nr, dth, weight, prev);
  est.value = prev.value;
  est.argmax_tau = prev.tau;
  est.grid_size = prev.size;
  est.skipped = prev.skipped;
  est.refinements = level;
  return est;
}

}  // namespace

NormEstimate outer_norm(const BorelCoefficient& coef, cplx eps, const NormParams& norms,
                        const RadiusSchedule& sched, const NormGrid& grid) {
  if (eps == cplx(0.0)) throw DomainError("outer_norm: eps must be nonzero");
  const int b = coef.beta;
  const double ae = std::abs(eps);
  const double r_lo = sched.R(b) * (1 + 1e-9);
  if (!(grid.r_outer > r_lo)) throw ValidationError("outer_norm: r_outer must exceed R_beta");
  const double q = sched.q();
  auto weight = [&](double r) {
    const double l = std::log(r / ae + norms.delta1);
    return std::exp(-norms.M * l * l - norms.C * b * std::log(r / ae) -
                    norms.A1 * b * double(b) * std::log(q));
  };
  return refine(coef, eps, r_lo, grid.r_outer, grid.arg_lo, grid.arg_hi, false, grid, weight);
}

NormEstimate inner_norm(const BorelCoefficient& coef, cplx eps, const NormParams& norms,
                        const RadiusSchedule& sched, const NormGrid& grid) {
  if (eps == cplx(0.0)) throw DomainError("inner_norm: eps must be nonzero");
  const int b = coef.beta;
  const double ae = std::abs(eps);
  const double rh = sched.Rhat(b) * (1 - 1e-9);
  auto weight = [&](double r) {
    const double l = std::log(r + norms.delta1);
    return std::exp(norms.C * b * std::log(ae) - norms.M * l * l);
  };
  return refine(coef, eps, rh * grid.inner_floor, rh, 0.0, 0.0, true, grid, weight);
}

BoundFit fit_growth(const std::vector<double>& n, double delta) {
  if (n.size() < 5) throw ValidationError("fit_growth: need at least 5 values of beta");
  if (!(delta > 0)) throw ValidationError("fit_growth: delta must be positive");
  std::vector<int> idx;
  std::vector<double> y(n.size());
  for (std::size_t b = 0; b < n.size(); ++b) {
    if (!std::isfinite(n[b]) || n[b] < 0) throw DataError("fit_growth: negative or non-finite norm");
    if (n[b] == 0) continue;
    idx.push_back(static_cast<int>(b));
    y[b] = std::log(n[b]) - std::lgamma(b + 1.0);
  }
  BoundFit f;
  f.slack.assign(n.size(), std::numeric_limits<double>::infinity());
  if (idx.size() < 2) {
    f.degenerate = true;
    if (idx.size() == 1) f.C_amp = std::max(1.0, std::exp(y[idx[0]]));
    return f;
  }
  std::vector<double> slopes;
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = i + 1; j < idx.size(); ++j)
      slopes.push_back((y[idx[j]] - y[idx[i]]) / (idx[j] - idx[i]));
  std::sort(slopes.begin(), slopes.end());
  const std::size_t m = slopes.size();
  const double slope = m % 2 ? slopes[m / 2] : 0.5 * (slopes[m / 2 - 1] + slopes[m / 2]);
  double icpt = -std::numeric_limits<double>::infinity();
  for (int b : idx) icpt = std::max(icpt, y[b] - slope * b);
  f.C_amp = std::exp(icpt);
  f.C_rate = delta * std::exp(slope);
  for (int b : idx) f.slack[b] = icpt + slope * b - y[b];
  return f;
}

}  // namespace qgevrey
