#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qgevrey/errors.hpp"
#include "qgevrey/util.hpp"

namespace qgevrey {

// Polynomial in eps with complex coefficients, c[p] multiplies eps^p.
struct EpsPoly {
  std::vector<cplx> c;

  EpsPoly() = default;
  explicit EpsPoly(std::vector<cplx> coeffs) : c(std::move(coeffs)) { trim(); }
  static EpsPoly constant(cplx v) { return EpsPoly({v}); }

  cplx eval(cplx eps) const;
  bool is_zero() const { return c.empty(); }
  int degree() const { return static_cast<int>(c.size()) - 1; }
  void trim();

  EpsPoly& operator+=(const EpsPoly& o);
  EpsPoly& operator*=(cplx s);
  friend EpsPoly operator*(const EpsPoly& x, const EpsPoly& y);
  friend bool operator==(const EpsPoly&, const EpsPoly&) = default;
};

// c * eps^eps_power * tau^tau_power * (a - tau)^(-pole_order)
struct InitTerm {
  cplx c{1.0, 0.0};
  int eps_power = 0;
  int tau_power = 0;
  int pole_order = 0;
};

struct KappaEntry {
  int k0 = 0;
  int k1 = 1;
  int m1 = 0;
  int m2 = 0;
  std::map<int, EpsPoly> b;  // s -> b_{kappa,s}(eps); keys form I_kappa
};

struct ProblemSpec {
  int S = 1;
  cplx a{-1.0, 0.0};
  double q = 0.5;
  std::vector<KappaEntry> kappa;
  double r0 = 1.0;
  std::vector<std::vector<InitTerm>> initial_data;  // size S

  void validate() const;
  int max_k0() const;
  int max_k1() const;
  int max_s() const;
  int max_m1() const;
};

cplx eval_initial(const std::vector<InitTerm>& terms, cplx a, cplx eps, cplx tau);

struct NormParams {
  double M = 1.0;
  double A1 = 1.0;
  double C = 1.0;
  double delta1 = 1.0;
  double M_tilde = 0.5;
  int K0 = 0;
  double Delta_ic = 1.0;
  double delta_series = 0.5;

  void validate(const ProblemSpec& spec) const;
};

// R_beta = d1 q^(d2 beta); Rhat_beta = Rhat0 for beta < S, dhat1 q^(dhat2 beta) otherwise.
class RadiusSchedule {
 public:
  RadiusSchedule(double d1, double d2, double dhat1, double dhat2, double Rhat0, int S, double q);

  double d1() const { return d1_; }
  double d2() const { return d2_; }
  double dhat1() const { return dhat1_; }
  double dhat2() const { return dhat2_; }
  double Rhat0() const { return Rhat0_; }
  int S() const { return S_; }
  double q() const { return q_; }

  double R(int beta) const;
  double Rhat(int beta) const;
  double log_R(int beta) const;
  double log_Rhat(int beta) const;

 private:
  double d1_, d2_, dhat1_, dhat2_, Rhat0_;
  int S_;
  double q_;
};

std::pair<double, double> radius(int beta, const RadiusSchedule& sched);

struct Sector {
  double dir = 0.0;
  double opening = 1.0;
  double radius = 1.0;
};

struct AssocSector {
  double dir = 0.0;
  double opening = 1.0;
};

struct TDomain {
  double arg_lo = 0.0;
  double arg_hi = 0.0;
  double r_T = 1.0;
  double r_max = 2.0;  // sampling cap only
};

struct SectorGeometry {
  std::vector<Sector> covering;
  std::vector<AssocSector> assoc;
  TDomain T;
  std::vector<double> gammas;
  double delta2 = 0.5;
  double delta3 = 0.1;

  int nu() const { return static_cast<int>(covering.size()); }
  double nu0() const;
  void validate() const;
};

// Angle helpers; canonical representative in [0, 2pi).
double canonical_angle(double x);
// Signed difference x - y reduced to (-pi, pi].
double angle_diff(double x, double y);

struct AssumptionEntry {
  int k0 = 0, k1 = 0, s = 0;
  double slack1 = 0.0;  // must be >= 0
  double slack2 = 0.0;  // must be > 0
  double slack1_prime = 0.0;
  double slack2_prime = 0.0;
  bool pass = false;
  bool pass_prime = false;
};

struct AssumptionReport {
  std::vector<AssumptionEntry> entries;
  bool pass = true;
  bool pass_prime = true;
  bool vacuous = false;
};

AssumptionReport check_assumption_A(const ProblemSpec& spec, const NormParams& norms,
                                    const RadiusSchedule& sched);

struct ScheduleEntry {
  int k0 = 0, k1 = 0, s = 0;
  bool B_closed = false;
  bool B_loop = false;
  bool Bp_closed = false;
  bool Bp_loop = false;
  int B_first_fail = -1;
  int Bp_first_fail = -1;
};

struct ScheduleReport {
  std::vector<ScheduleEntry> entries;
  bool pass_B = true;
  bool pass_Bp = true;
  bool holomorphy_exponent = true;  // dhat2 >= mbar / (S - kappa10)
  bool loop_agrees = true;
  bool vacuous = false;
};

ScheduleReport check_assumption_B(const ProblemSpec& spec, const RadiusSchedule& sched, int B_max);

struct CoverReport {
  bool pass = false;
  bool overlaps_ok = false;
  bool coverage_ok = false;
  std::vector<std::pair<int, int>> missing_overlaps;
  std::vector<std::pair<double, double>> gaps;  // uncovered arcs [lo, hi)
  std::vector<double> uncovered_samples;
  double nu0 = 0.0;
};

CoverReport check_good_covering(const SectorGeometry& geom, int angular_samples);

struct AssociationEntry {
  int sector = 0;
  bool ray_in_assoc = false;
  bool decay_ok = false;
  double min_cos = 0.0;
  bool ray_far_from_a = false;
  double ray_distance_to_a = 0.0;
  bool ray_dodges_poles = false;
  double pole_angle = 0.0;
  bool conj_in_assoc = false;
  bool assoc_contains_a = false;
};

struct AssociationReport {
  std::vector<AssociationEntry> entries;
  bool pass = true;
};

// Checks the associated-family conditions on sampled (t, eps) pairs.
AssociationReport check_associated_family(const SectorGeometry& geom, const ProblemSpec& spec,
                                          int samples);

}  // namespace qgevrey
