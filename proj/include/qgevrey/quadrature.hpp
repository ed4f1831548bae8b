#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

#include "qgevrey/util.hpp"

namespace qgevrey {

template <typename Real>
struct GaussRule {
  std::vector<Real> x;  // nodes on [-1, 1]
  std::vector<Real> w;
};

// Nodes from Newton iteration on the three-term Legendre recurrence.
template <typename Real>
GaussRule<Real> make_gauss_legendre(int n) {
  GaussRule<Real> r;
  r.x.assign(n, Real(0));
  r.w.assign(n, Real(0));
  const Real pi = std::numbers::pi_v<Real>;
  // returns (P_n(z), P_n'(z))
  auto legendre = [n](Real z) {
    Real p0 = 1, p1 = z;
    for (int k = 2; k <= n; ++k) {
      const Real p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    return std::pair<Real, Real>(p1, n * (z * p1 - p0) / (z * z - 1));
  };
  for (int i = 0; i < n / 2; ++i) {
    Real z = std::cos(pi * (i + Real(0.75)) / (n + Real(0.5)));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(z);
      const Real dz = p / dp;
      z -= dz;
      if (std::abs(dz) <= 4 * std::numeric_limits<Real>::epsilon()) break;
    }
    const Real dp = legendre(z).second;
    const Real w = 2 / ((1 - z * z) * dp * dp);
    r.x[i] = -z;
    r.x[n - 1 - i] = z;
    r.w[i] = w;
    r.w[n - 1 - i] = w;
  }
  if (n % 2 == 1) {
    // P_n'(0) from the recurrence; the middle node is 0.
    Real p0 = 1, p1 = 0;
    for (int k = 2; k <= n; ++k) {
      const Real p2 = (-(k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    const Real dp = n * p0;
    r.w[n / 2] = 2 / (dp * dp);
  }
  return r;
}

template <typename Real>
const GaussRule<Real>& gauss_legendre(int n) {
  static std::mutex m;
  static std::vector<std::unique_ptr<GaussRule<Real>>> cache;
  std::lock_guard<std::mutex> lock(m);
  if (static_cast<int>(cache.size()) <= n) cache.resize(n + 1);
  if (!cache[n]) cache[n] = std::make_unique<GaussRule<Real>>(make_gauss_legendre<Real>(n));
  return *cache[n];
}

// Integral of f over [a, b] with an n-point rule; f returns a value type V.
template <typename Real, typename F>
auto gauss_panel(F&& f, Real a, Real b, int n) {
  const auto& g = gauss_legendre<Real>(n);
  const Real h = (b - a) / 2, c = (a + b) / 2;
  using V = decltype(f(c));
  V s = V(0);
  for (int i = 0; i < n; ++i) s += g.w[i] * f(c + h * g.x[i]);
  return s * h;
}

template <typename V>
struct PanelResult {
  V value{};
  double error = 0.0;  // |high - low| summed over panels
};

// Composite rule over consecutive breakpoints; each panel compares n and n - 4 points.
template <typename Real, typename F>
auto integrate_panels(F&& f, const std::vector<Real>& breaks, int n = 24) {
  const int n_low = std::max(2, n - 4);
  using V = decltype(f(breaks[0]));
  std::vector<V> hi(breaks.size() - 1), lo(breaks.size() - 1);
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    hi[k] = gauss_panel<Real>(f, breaks[k], breaks[k + 1], n);
    lo[k] = gauss_panel<Real>(f, breaks[k], breaks[k + 1], n_low);
  }
  PanelResult<V> r;
  r.value = pairwise_sum(hi);
  double e = 0.0;
  for (std::size_t k = 0; k < hi.size(); ++k) e += static_cast<double>(std::abs(hi[k] - lo[k]));
  r.error = e;
  return r;
}

// Breakpoints 0 < x0 < ... on [lo, hi]: geometric with ratio `grade` from lo upward
// until the step reaches max_width, then uniform.
template <typename Real>
std::vector<Real> graded_breaks(Real lo, Real hi, Real first, Real grade, Real max_width) {
  std::vector<Real> b{lo};
  Real x = lo + first;
  Real w = first;
  while (x < hi) {
    b.push_back(x);
    w = std::min(w * grade, max_width);
    x += w;
  }
  b.push_back(hi);
  return b;
}

// Integral over R of exp(-x^2 - a x), computed by quadrature.
double gaussian_moment(double a);

}  // namespace qgevrey
