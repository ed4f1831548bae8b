#include "qgevrey/borel_recursion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <mutex>
#include <string>

namespace qgevrey {

namespace {

struct TermKey {
  int leaf, dilation, tau_power, eps_power;
  std::vector<int> poles;
  auto operator<=>(const TermKey&) const = default;
};

TermKey key_of(const Term& t) { return {t.leaf, t.dilation, t.tau_power, t.eps_power, t.poles}; }

// Leaf terms (j < S) for use inside the recursion: W_j itself, undilated.
std::vector<Term> leaf_reference(int j) {
  Term t;
  t.coeff = EpsPoly::constant(1.0);
  t.leaf = j;
  return {t};
}

std::vector<Term> initial_as_terms(const ProblemSpec& spec, int j) {
  std::map<TermKey, EpsPoly> acc;
  for (const auto& it : spec.initial_data[j]) {
    Term t;
    t.coeff = EpsPoly::constant(it.c);
    t.tau_power = it.tau_power;
    t.eps_power = it.eps_power;
    t.poles.assign(it.pole_order, 0);
    acc[key_of(t)] += t.coeff;
  }
  std::vector<Term> out;
  for (auto& [k, c] : acc) {
    if (c.is_zero()) continue;
    Term t;
    t.coeff = c;
    t.leaf = k.leaf;
    t.dilation = k.dilation;
    t.tau_power = k.tau_power;
    t.eps_power = k.eps_power;
    t.poles = k.poles;
    out.push_back(std::move(t));
  }
  return out;
}

int leaf_max_pole(const ProblemSpec& spec, int j) {
  int e = 0;
  for (const auto& it : spec.initial_data[j]) e = std::max(e, it.pole_order);
  return e;
}

void fill_ledger(BorelCoefficient& c, const ProblemSpec& spec) {
  std::vector<int> ks;
  for (const auto& t : c.terms) {
    ks.insert(ks.end(), t.poles.begin(), t.poles.end());
    if (t.leaf >= 0 && leaf_max_pole(spec, t.leaf) > 0) ks.push_back(t.dilation);
  }
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  c.pole_ks = ks;
  c.singularities.clear();
  for (int k : ks) c.singularities.push_back(spec.a * std::pow(spec.q, k));
}

using Fetch = std::function<std::vector<Term>(int)>;

// Unfolds one level of the recursion for W_beta, beta >= S.
std::vector<Term> unfold(const ProblemSpec& spec, int beta, const Fetch& lower,
                         std::size_t term_cap) {
  const int h = beta - spec.S;
  const double q = spec.q;
  std::map<TermKey, EpsPoly> acc;
  for (const auto& k : spec.kappa) {
    for (const auto& [s, bpoly] : k.b) {
      if (s > h || bpoly.is_zero()) continue;
      const int h2 = h - s;
      // h!/h2! is a falling factorial with s factors.
      double ff = 1.0;
      for (int f = h2 + 1; f <= h; ++f) ff *= f;
      const double sign = (k.k0 % 2 == 0) ? 1.0 : -1.0;
      const double scal = sign * ff * std::pow(q, k.m2 * h2 - k.m1 * (k.k0 + 1));
      for (const auto& src : lower(h2 + k.k1)) {
        Term t;
        t.coeff = src.coeff * bpoly;
        t.coeff *= scal * std::pow(q, -k.m1 * src.tau_power);
        t.tau_power = src.tau_power + k.k0;
        t.eps_power = src.eps_power - k.k0;
        t.poles.reserve(src.poles.size() + 1);
        t.poles.push_back(0);
        for (int p : src.poles) t.poles.push_back(p + k.m1);
        std::sort(t.poles.begin(), t.poles.end());
        t.leaf = src.leaf;
        t.dilation = src.leaf >= 0 ? src.dilation + k.m1 : 0;
        acc[key_of(t)] += t.coeff;
        if (acc.size() > term_cap)
          throw ResourceError("term count exceeds cap " + std::to_string(term_cap) +
                              " at beta=" + std::to_string(beta));
      }
    }
  }
  std::vector<Term> out;
  out.reserve(acc.size());
  for (auto& [key, c] : acc) {
    if (c.is_zero()) continue;
    Term t;
    t.coeff = std::move(c);
    t.leaf = key.leaf;
    t.dilation = key.dilation;
    t.tau_power = key.tau_power;
    t.eps_power = key.eps_power;
    t.poles = key.poles;
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Term> unfold_uncached(const ProblemSpec& spec, int beta, std::size_t cap) {
  if (beta < spec.S) return leaf_reference(beta);
  return unfold(spec, beta, [&](int b) { return unfold_uncached(spec, b, cap); }, cap);
}

}  // namespace

bool term_key_less(const Term& x, const Term& y) { return key_of(x) < key_of(y); }

CoefficientTable::CoefficientTable(std::shared_ptr<const ProblemSpec> spec, std::size_t term_cap)
    : spec_(std::move(spec)), term_cap_(term_cap) {
  spec_->validate();
}

std::shared_ptr<const BorelCoefficient> CoefficientTable::get(int beta) {
  if (beta < 0) throw DomainError("beta must be nonnegative");
  {
    std::shared_lock lock(mutex_);
    auto it = memo_.find(beta);
    if (it != memo_.end()) return it->second;
  }
  auto c = std::make_shared<BorelCoefficient>();
  c->beta = beta;
  c->spec = spec_;
  if (beta < spec_->S) {
    c->terms = initial_as_terms(*spec_, beta);
  } else {
    // Lower levels are fetched through the table; their terms are already canonical.
    Fetch lower = [this](int b) {
      if (b < spec_->S) return leaf_reference(b);
      return get(b)->terms;
    };
    c->terms = unfold(*spec_, beta, lower, term_cap_);
  }
  fill_ledger(*c, *spec_);
  std::unique_lock lock(mutex_);
  auto [it, inserted] = memo_.emplace(beta, std::move(c));
  return it->second;
}

BorelCoefficient build_coefficient(std::shared_ptr<const ProblemSpec> spec, int beta,
                                   CoefficientTable* cache, std::size_t term_cap) {
  if (beta < 0) throw DomainError("beta must be nonnegative");
  if (cache) return *cache->get(beta);
  spec->validate();
  BorelCoefficient c;
  c.beta = beta;
  c.spec = spec;
  c.terms = beta < spec->S ? initial_as_terms(*spec, beta) : unfold_uncached(*spec, beta, term_cap);
  fill_ledger(c, *spec);
  return c;
}

double default_exclusion(const ProblemSpec& spec) { return 1e-9 * std::abs(spec.a); }

cplx eval_W(const BorelCoefficient& coef, cplx eps, cplx tau, double exclusion) {
  const ProblemSpec& spec = *coef.spec;
  if (eps == cplx{0.0, 0.0}) throw DomainError("eps must be nonzero");
  if (exclusion < 0) exclusion = default_exclusion(spec);
  for (const auto& p : coef.singularities)
    if (std::abs(tau - p) <= exclusion)
      throw SingularityError("tau within exclusion distance of ledger pole", p);
  const cplx a = spec.a;
  const double q = spec.q;
  cplx acc{0.0, 0.0};
  for (const auto& t : coef.terms) {
    cplx v = t.coeff.eval(eps);
    if (t.eps_power != 0) v *= ipow(eps, t.eps_power);
    if (t.tau_power != 0) v *= ipow(tau, t.tau_power);
    for (int k : t.poles) v /= (a - std::pow(q, -k) * tau);
    if (t.leaf >= 0) v *= eval_initial(spec.initial_data[t.leaf], a, eps, std::pow(q, -t.dilation) * tau);
    acc += v;
  }
  return acc;
}

GrowthBound ray_growth_bound(const BorelCoefficient& coef, cplx eps, double dist_to_a) {
  const ProblemSpec& spec = *coef.spec;
  GrowthBound g;
  const double ae = std::abs(eps);
  for (const auto& t : coef.terms) {
    double k = std::abs(t.coeff.eval(eps)) * std::pow(ae, t.eps_power) *
               std::pow(dist_to_a, -static_cast<double>(t.poles.size()));
    int P = t.tau_power;
    if (t.leaf >= 0) {
      double lk = 0.0;
      int lp = 0;
      for (const auto& it : spec.initial_data[t.leaf]) {
        lk += std::abs(it.c) * std::pow(ae, it.eps_power) *
              std::pow(spec.q, -static_cast<double>(t.dilation) * it.tau_power) *
              std::pow(dist_to_a, -static_cast<double>(it.pole_order));
        lp = std::max(lp, it.tau_power);
      }
      k *= lk;
      P += lp;
    }
    g.K += k;
    g.P = std::max(g.P, P);
  }
  return g;
}

std::vector<cplx> singularity_ledger(const ProblemSpec& spec, int beta, CoefficientTable* cache) {
  if (cache) return cache->get(beta)->singularities;
  auto sp = std::make_shared<const ProblemSpec>(spec);
  return build_coefficient(sp, beta).singularities;
}

std::vector<HolomorphyRow> holomorphy_check(CoefficientTable& table, const RadiusSchedule& sched,
                                            int beta_max) {
  const ProblemSpec& spec = table.spec();
  std::vector<HolomorphyRow> rows;
  const double la = std::log(std::abs(spec.a));
  const double lq = std::log(spec.q);
  for (int b = 0; b <= beta_max; ++b) {
    HolomorphyRow r;
    r.beta = b;
    r.Rhat = sched.Rhat(b);
    const auto c = table.get(b);
    if (c->pole_ks.empty()) {
      r.min_modulus = std::numeric_limits<double>::infinity();
    } else {
      r.max_k = c->pole_ks.back();
      r.min_modulus = std::abs(spec.a) * std::pow(spec.q, r.max_k);
      r.pass = la + r.max_k * lq >= sched.log_Rhat(b) - 1e-12;
    }
    rows.push_back(r);
  }
  return rows;
}

std::vector<OrderResidual> series_residual(CoefficientTable& table, int B, cplx eps, cplx tau) {
  const ProblemSpec& spec = table.spec();
  if (B < spec.S) throw OrderError("truncation order below S");
  std::vector<OrderResidual> out;
  const double q = spec.q;
  for (int k = 0; k <= B - spec.S; ++k) {
    // z^k coefficient of d_z^S W is W_{k+S}/k!.
    const double kf = std::tgamma(k + 1.0);
    const cplx lhs = eval_W(*table.get(k + spec.S), eps, tau) / kf;
    cplx rhs{0.0, 0.0};
    double scale = std::abs(lhs);
    for (const auto& kap : spec.kappa) {
      for (const auto& [s, bpoly] : kap.b) {
        if (s > k) continue;
        const int h2 = k - s;
        const cplx pre = bpoly.eval(eps) * ipow(-tau / eps, kap.k0) *
                         std::pow(q, kap.m2 * h2) /
                         ((spec.a - tau) * std::tgamma(h2 + 1.0) * std::pow(q, kap.m1 * (kap.k0 + 1)));
        const cplx w = eval_W(*table.get(h2 + kap.k1), eps, std::pow(q, -kap.m1) * tau);
        rhs += pre * w;
        scale = std::max(scale, std::abs(pre * w));
      }
    }
    OrderResidual r;
    r.order = k;
    r.lhs_abs = std::abs(lhs);
    r.residual = std::abs(lhs - rhs) / std::max(1.0, scale);
    out.push_back(r);
  }
  return out;
}

void dump_coefficient(const BorelCoefficient& coef, std::ostream& os) {
  char buf[64];
  for (const auto& t : coef.terms) {
    os << "leaf=" << t.leaf << " dilation=" << t.dilation << " tau_power=" << t.tau_power
       << " eps_power=" << t.eps_power << " poles=[";
    for (std::size_t i = 0; i < t.poles.size(); ++i) os << (i ? "," : "") << t.poles[i];
    os << "] coeff=[";
    for (std::size_t i = 0; i < t.coeff.c.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g", t.coeff.c[i].real(), t.coeff.c[i].imag());
      os << (i ? ";" : "") << buf;
    }
    os << "]\n";
  }
}

}  // namespace qgevrey
