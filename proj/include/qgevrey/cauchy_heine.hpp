#pragma once

#include <functional>
#include <vector>

#include "qgevrey/errors.hpp"
#include "qgevrey/qgevrey_asymptotics.hpp"

namespace qgevrey {

// Segments C_l = [0, r e^{i theta_l}], theta increasing counterclockwise. The sector
// E~_l lies between C_{l-1} and C_l; Delta_l lives on a neighbourhood of C_l.
struct CocycleData {
  int nu = 2;
  std::vector<double> theta;
  double r = 1.0;
  std::vector<std::function<cplx(cplx)>> delta;
  double L = 1.0;
  std::vector<double> K;
  double q = 0.5;
  double overlap_half_width = 0.5;

  void validate() const;
  bool zero(int l) const { return !delta[l]; }
};

struct PathIntegral {
  cplx value{};
  double error = 0.0;
};

// nu = 2 cocycle on theta = {0, pi}: Delta_0(xi) = exp(-Log(xi)^2 / (2 L (-log q))), Delta_1 = 0.
// K_0 is measured over the overlap.
CocycleData gaussian_cocycle(double L, double q, double r = 1.0, double eta = 0.5);

// -1/(2 pi i) sum_h int_{C_h} Delta_h(xi) / (xi - eps) dxi, segments oriented toward 0.
cplx heine_primitive(const CocycleData& data, int l, cplx eps, double exclusion = 1e-8);
PathIntegral heine_primitive_with_error(const CocycleData& data, int l, cplx eps,
                                        double exclusion = 1e-8);

struct CoboundaryReport {
  std::vector<cplx> eps;
  std::vector<double> gaps;
  std::vector<double> error_estimates;
  double max_gap = 0.0;
};

// Psi_{l+1} - Psi_l - Delta_l on grid points near C_l, with C_l bent around each point.
CoboundaryReport coboundary_check(const CocycleData& data, int l, const std::vector<cplx>& eps_grid,
                                  int threads = 0);

struct TaylorCoefficient {
  int m = 0;
  cplx alpha{};
  double error = 0.0;
  double envelope = 0.0;
  double ratio = 0.0;
};

// alpha_{l,m} = 1/(2 pi i) int_{C_l} Delta_l(xi) xi^{-m-1} dxi, outward orientation.
std::vector<TaylorCoefficient> taylor_coefficients(const CocycleData& data, int l, int m_max);

double coefficient_envelope(const CocycleData& data, int l, int m);

// max |Delta_l| e^{log^2|eps| / (2 L (-log q))} on a sample of the overlap around C_l.
double measure_flatness_amplitude(const CocycleData& data, int l, int radial = 40, int angular = 9);

// Type fit of |Delta_l| along theta_l over |eps| in [1e-4, 1e-1] * r.
TypeFit cocycle_flatness(const CocycleData& data, int l);

struct SectorExpansion {
  int sector = 0;
  std::vector<cplx> phi;
  std::vector<double> phi_error;
  std::vector<double> remainder;  // max over the grid of |G - sum_{m<M}| / |eps|^M, M = 1..m_max
  double L_measured = 0.0;
  bool feasible = false;
  ExpansionReport expansion;
};

struct ReconstructReport {
  std::vector<SectorExpansion> sectors;
  double max_coefficient_gap = 0.0;  // relative, across sectors
  bool shared = false;
  bool feasible = false;
  double L_hat = 0.0;
};

// G_l = Psi_l + 1/(1 - eps). Coefficients are recomputed per sector on paths rotated by
// +-w into that sector; the remainder type comes from a quadratic fit in (M - 1).
ReconstructReport reconstruct_expansion(const CocycleData& data, int m_max,
                                        const std::vector<std::vector<cplx>>& eps_grids,
                                        double L_hat_factor = 1.1, double w = 0.2);

}  // namespace qgevrey
