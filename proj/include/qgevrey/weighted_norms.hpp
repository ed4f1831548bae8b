#pragma once

#include <vector>

#include "qgevrey/borel_recursion.hpp"

namespace qgevrey {

struct NormEstimate {
  int beta = 0;
  cplx eps{};
  double value = 0.0;
  int grid_size = 0;
  cplx argmax_tau{};
  int skipped = 0;      // grid points rejected by the pole guard
  int refinements = 0;  // density doublings performed
};

// Log-radial x angular sampling plan. Each refinement doubles both densities (the grids
// are nested); the best grid point is then polished by a shrinking pattern search.
struct NormGrid {
  double arg_lo = 0.0;  // sector of S (ignored by inner_norm, which uses the full disc)
  double arg_hi = 0.0;
  double r_outer = 10.0;       // truncation of the unbounded S_beta
  double inner_floor = 1e-6;   // inner_norm samples |tau| >= inner_floor * Rhat_beta
  int radial = 16;
  int angular = 8;
  int max_refinements = 6;
  double rel_tol = 1e-3;
};

// sup over S_beta of |W| e^{-M log^2(|tau|/|eps| + delta1)} |tau/eps|^{-C beta} q^{-A1 beta^2}
NormEstimate outer_norm(const BorelCoefficient& coef, cplx eps, const NormParams& norms,
                        const RadiusSchedule& sched, const NormGrid& grid);

// sup over the punctured disc of radius Rhat_beta of |W| |eps|^{C beta} e^{-M log^2(|tau| + delta1)}
NormEstimate inner_norm(const BorelCoefficient& coef, cplx eps, const NormParams& norms,
                        const RadiusSchedule& sched, const NormGrid& grid);

struct BoundFit {
  double C_amp = 1.0;   // C13 or C23
  double C_rate = 1.0;  // C14 or C24
  std::vector<double> slack;  // log(envelope / norm) per beta, +inf for zero norms
  bool degenerate = false;
};

// Envelope norm_beta <= C_amp beta! (C_rate / delta)^beta. The rate comes from the
// median pairwise slope of log norm_beta - log beta!, the amplitude from the largest
// residual, so every slack is >= 0 and isolated outliers only move C_amp.
BoundFit fit_growth(const std::vector<double>& norms_by_beta, double delta);
inline BoundFit fit_growth(const std::vector<double>& norms_by_beta, const NormParams& norms) {
  return fit_growth(norms_by_beta, norms.delta_series);
}

}  // namespace qgevrey
