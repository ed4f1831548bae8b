#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include "qgevrey/borel_recursion.hpp"

namespace qgevrey {

struct QuadraturePlan {
  int points = 24;            // Gauss-Legendre nodes per panel
  double grade = 1.5;         // panel growth ratio away from 0
  double first_rel = 1e-14;   // first panel width relative to t_max
  double tail_tol = 1e-17;    // tail bound target relative to K / lambda
  double t_max = 0.0;         // 0: chosen from the tail certificate
  int max_panels = 20000;
  double pole_angle_tol = 1e-3;
};

struct LaplaceResult {
  cplx value{};
  double error = 0.0;  // panel-rule estimate plus tail bound
  double tail = 0.0;
  double t_max = 0.0;
  int panels = 0;
};

// Decay rate of e^{-t tau / eps} along direction gamma: |t/eps| cos(gamma + arg(t/eps)).
double ray_decay(double gamma, cplx t, cplx eps);

// int_0^inf f(s e^{i gamma}) e^{-t s e^{i gamma} / eps} e^{i gamma} ds.
// `growth` must bound |f| on the ray by K (1+s)^P; `poles` steer panel widths.
LaplaceResult laplace_ray(const std::function<cplx(cplx)>& f, double gamma, cplx t, cplx eps,
                          const QuadraturePlan& plan, const GrowthBound& growth,
                          double delta2 = 0.0, const std::vector<cplx>& poles = {});

struct DerivativeCheck {
  cplx finite_difference{};
  cplx transform{};
  double gap = 0.0;  // relative
  double threshold = 0.0;
  bool pass = false;
};

// Central difference in t (Richardson extrapolated) against the transform of (-tau/eps) f.
DerivativeCheck laplace_derivative_check(const std::function<cplx(cplx)>& f, double gamma, cplx t,
                                         cplx eps, double h, const QuadraturePlan& plan,
                                         const GrowthBound& growth);

// Minimal distance from a point to the closed ray of direction gamma.
double ray_distance(cplx p, double gamma);

class SectorialSolution {
 public:
  SectorialSolution(std::shared_ptr<CoefficientTable> table, const SectorGeometry& geom, int sector,
                    int B_max, const QuadraturePlan& plan, double A1);

  int sector() const { return sector_; }
  double gamma() const { return gamma_; }
  int B_max() const { return B_max_; }
  CoefficientTable& table() const { return *table_; }
  const QuadraturePlan& plan() const { return plan_; }

  // X_{i,beta}(eps, t) with optional tau-multiplier (-tau/eps)^k0.
  LaplaceResult X(int beta, cplx eps, cplx t, int k0 = 0) const;
  // d/dt X_{i,beta}, computed as the transform of (-tau/eps) W_beta.
  LaplaceResult Xt(int beta, cplx eps, cplx t) const { return X(beta, eps, t, 1); }

  struct Value {
    cplx value{};
    double tail = 0.0;  // NaN when the (C31, C32) fit failed
  };
  // Sum_{beta <= B_max} X_beta z^beta / beta! with a fitted tail estimate.
  Value eval(cplx eps, cplx t, cplx z) const;
  // j-th z-derivative at z = 0 of the truncated series.
  cplx dz_at_zero(int j, cplx eps, cplx t) const;

 private:
  std::shared_ptr<CoefficientTable> table_;
  int sector_;
  double gamma_;
  int B_max_;
  QuadraturePlan plan_;
  double A1_;
  double delta2_;
  mutable std::mutex mutex_;
  mutable std::map<std::tuple<int, int, double, double, double, double>, LaplaceResult> cache_;
};

std::shared_ptr<SectorialSolution> build_solution(std::shared_ptr<CoefficientTable> table,
                                                  const SectorGeometry& geom, int sector, int B_max,
                                                  const QuadraturePlan& plan, double A1);

struct ResidualSample {
  cplx eps{}, t{}, z{};
};

struct ResidualReport {
  std::vector<double> residuals;
  double max_residual = 0.0;
};

// |LHS - RHS| / (1 + |LHS|) for the main equation, both sides projected to z-degree <= B_max - S.
ResidualReport pde_residual(const SectorialSolution& sol, const std::vector<ResidualSample>& samples,
                            int threads = 0);

struct CocycleFit {
  std::vector<double> eps_abs;
  std::vector<double> D;
  double c_hat = 0.0;
  double intercept = 0.0;
  bool underflow = false;  // every D below 1e-300
  int dropped = 0;
};

// Least squares fit of log D = -c log^2|eps| + b.
CocycleFit fit_log2_decay(const std::vector<double>& eps_abs, const std::vector<double>& D);

double cocycle_floor(double A1, double d2, double Delta, double q);

// sup over (t, z) of |X_j - X_i| at each eps. With by_residues the difference of the two ray
// integrals is evaluated as small circles around the ledger poles swept between the rays.
CocycleFit cocycle_difference(const SectorialSolution& sol_i, const SectorialSolution& sol_j,
                              const std::vector<cplx>& eps_grid, const std::vector<cplx>& t_samples,
                              const std::vector<cplx>& z_samples, bool by_residues = true,
                              int threads = 0);

// X_{j,beta} - X_{i,beta} via contour circles (rays gamma_i -> gamma_j).
cplx ray_difference(const BorelCoefficient& coef, double gamma_i, double gamma_j, cplx eps, cplx t,
                    int circle_points = 64);

}  // namespace qgevrey
