#pragma once

#include <map>
#include <memory>
#include <ostream>
#include <shared_mutex>
#include <vector>

#include "qgevrey/problem_model.hpp"

namespace qgevrey {

// coeff(eps) * eps^eps_power * tau^tau_power * prod_k (a - q^-k tau)^-1 * leaf(q^-dilation tau)
struct Term {
  EpsPoly coeff;
  int tau_power = 0;
  int eps_power = 0;
  std::vector<int> poles;  // sorted multiset of k
  int dilation = 0;
  int leaf = -1;  // -1: pure term

  friend bool operator==(const Term&, const Term&) = default;
};

// Canonical order on (leaf, dilation, tau_power, eps_power, poles).
bool term_key_less(const Term& x, const Term& y);

struct BorelCoefficient {
  int beta = 0;
  std::vector<Term> terms;
  std::vector<int> pole_ks;        // distinct k, ascending
  std::vector<cplx> singularities;  // a q^k for k in pole_ks
  std::shared_ptr<const ProblemSpec> spec;
};

class CoefficientTable {
 public:
  explicit CoefficientTable(std::shared_ptr<const ProblemSpec> spec,
                            std::size_t term_cap = 1000000);

  std::shared_ptr<const BorelCoefficient> get(int beta);
  const ProblemSpec& spec() const { return *spec_; }
  std::shared_ptr<const ProblemSpec> spec_ptr() const { return spec_; }
  std::size_t term_cap() const { return term_cap_; }

 private:
  std::shared_ptr<const ProblemSpec> spec_;
  std::size_t term_cap_;
  std::shared_mutex mutex_;
  std::map<int, std::shared_ptr<const BorelCoefficient>> memo_;
};

// With cache == nullptr every lower coefficient is recomputed from scratch.
BorelCoefficient build_coefficient(std::shared_ptr<const ProblemSpec> spec, int beta,
                                   CoefficientTable* cache = nullptr,
                                   std::size_t term_cap = 1000000);

double default_exclusion(const ProblemSpec& spec);

cplx eval_W(const BorelCoefficient& coef, cplx eps, cplx tau, double exclusion = -1.0);

// Upper bound K (1+s)^P for |W(eps, s e^{i gamma})| on a ray that keeps distance
// dist_to_a from a (every pole factor then satisfies |a - q^-k tau| >= dist_to_a).
struct GrowthBound {
  double K = 0.0;
  int P = 0;
};
GrowthBound ray_growth_bound(const BorelCoefficient& coef, cplx eps, double dist_to_a);

std::vector<cplx> singularity_ledger(const ProblemSpec& spec, int beta,
                                     CoefficientTable* cache = nullptr);

struct HolomorphyRow {
  int beta = 0;
  int max_k = -1;           // -1 when the ledger is empty
  double min_modulus = 0.0;  // +inf when empty
  double Rhat = 0.0;
  bool pass = true;
};

// min pole modulus of W_beta >= Rhat_beta, compared in log form.
std::vector<HolomorphyRow> holomorphy_check(CoefficientTable& table, const RadiusSchedule& sched,
                                            int beta_max);

struct OrderResidual {
  int order = 0;
  double lhs_abs = 0.0;
  double residual = 0.0;  // |lhs - rhs| / max(1, scale)
};

// Order-by-order residual of the auxiliary Borel-plane equation at (eps, tau) for the
// z^k coefficients, k = 0..B-S, of the series truncated at B.
std::vector<OrderResidual> series_residual(CoefficientTable& table, int B, cplx eps, cplx tau);

void dump_coefficient(const BorelCoefficient& coef, std::ostream& os);

}  // namespace qgevrey
