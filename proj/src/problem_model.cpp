#include "qgevrey/problem_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace qgevrey {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace

cplx EpsPoly::eval(cplx eps) const {
  cplx acc{0.0, 0.0};
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * eps + *it;
  return acc;
}

void EpsPoly::trim() {
  while (!c.empty() && c.back() == cplx{0.0, 0.0}) c.pop_back();
}

EpsPoly& EpsPoly::operator+=(const EpsPoly& o) {
  if (o.c.size() > c.size()) c.resize(o.c.size(), cplx{0.0, 0.0});
  for (std::size_t i = 0; i < o.c.size(); ++i) c[i] += o.c[i];
  trim();
  return *this;
}

EpsPoly& EpsPoly::operator*=(cplx s) {
  for (auto& v : c) v *= s;
  trim();
  return *this;
}

EpsPoly operator*(const EpsPoly& x, const EpsPoly& y) {
  if (x.is_zero() || y.is_zero()) return {};
  std::vector<cplx> r(x.c.size() + y.c.size() - 1, cplx{0.0, 0.0});
  for (std::size_t i = 0; i < x.c.size(); ++i)
    for (std::size_t j = 0; j < y.c.size(); ++j) r[i + j] += x.c[i] * y.c[j];
  return EpsPoly(std::move(r));
}

cplx eval_initial(const std::vector<InitTerm>& terms, cplx a, cplx eps, cplx tau) {
  cplx acc{0.0, 0.0};
  for (const auto& t : terms) {
    cplx v = t.c;
    if (t.eps_power != 0) v *= ipow(eps, t.eps_power);
    if (t.tau_power != 0) v *= ipow(tau, t.tau_power);
    if (t.pole_order != 0) v /= ipow(a - tau, t.pole_order);
    acc += v;
  }
  return acc;
}

void ProblemSpec::validate() const {
  if (S < 1) throw ValidationError("S must be >= 1");
  if (!(q > 0.0 && q < 1.0)) throw ValidationError("q must lie in (0,1)");
  if (!finite(a)) throw ValidationError("a must be finite");
  if (a.imag() == 0.0 && a.real() >= 0.0)
    throw ValidationError("a must not lie on the nonnegative real axis");
  if (!(r0 > 0.0)) throw ValidationError("r0 must be positive");
  if (static_cast<int>(initial_data.size()) != S)
    throw ValidationError("initial_data must hold exactly S term lists");
  for (const auto& list : initial_data)
    for (const auto& t : list) {
      if (!finite(t.c)) throw ValidationError("initial data coefficient not finite");
      if (t.tau_power < 0 || t.pole_order < 0)
        throw ValidationError("initial data powers must be nonnegative");
    }
  for (const auto& k : kappa) {
    if (k.k0 < 0) throw ValidationError("kappa0 must be nonnegative");
    if (k.k1 < 1 || k.k1 >= S) throw ValidationError("kappa1 must satisfy 1 <= kappa1 < S");
    if (k.m1 < 0 || k.m2 < 0) throw ValidationError("shift exponents must be nonnegative");
    for (const auto& [s, poly] : k.b) {
      if (s < 0) throw ValidationError("support index s must be nonnegative");
      for (const auto& v : poly.c)
        if (!finite(v)) throw ValidationError("b coefficient not finite");
    }
  }
  for (std::size_t i = 0; i < kappa.size(); ++i)
    for (std::size_t j = i + 1; j < kappa.size(); ++j)
      if (kappa[i].k0 == kappa[j].k0 && kappa[i].k1 == kappa[j].k1)
        throw ValidationError("duplicate (kappa0, kappa1) in kappa_set");
}

int ProblemSpec::max_k0() const {
  int r = 0;
  for (const auto& k : kappa) r = std::max(r, k.k0);
  return r;
}

int ProblemSpec::max_k1() const {
  int r = 0;
  for (const auto& k : kappa) r = std::max(r, k.k1);
  return r;
}

int ProblemSpec::max_s() const {
  int r = 0;
  for (const auto& k : kappa)
    for (const auto& [s, p] : k.b) r = std::max(r, s);
  return r;
}

int ProblemSpec::max_m1() const {
  int r = 0;
  for (const auto& k : kappa) r = std::max(r, k.m1);
  return r;
}

void NormParams::validate(const ProblemSpec& spec) const {
  if (!(M > 0 && A1 > 0 && C > 0 && delta1 > 0 && Delta_ic > 0))
    throw ValidationError("norm constants must be positive");
  if (!(M_tilde > 0 && M_tilde < M)) throw ValidationError("need 0 < M_tilde < M");
  if (!(delta_series > 0 && delta_series < 1)) throw ValidationError("delta must lie in (0,1)");
  if (K0 != spec.max_k0()) throw ValidationError("K0 must equal the largest kappa0");
}

RadiusSchedule::RadiusSchedule(double d1, double d2, double dhat1, double dhat2, double Rhat0,
                               int S, double q)
    : d1_(d1), d2_(d2), dhat1_(dhat1), dhat2_(dhat2), Rhat0_(Rhat0), S_(S), q_(q) {
  if (!(d1 > 0 && d2 > 0 && dhat1 > 0 && dhat2 > 0 && Rhat0 > 0))
    throw ValidationError("radius constants must be positive");
  if (S < 1) throw ValidationError("S must be >= 1");
  if (!(q > 0 && q < 1)) throw ValidationError("q must lie in (0,1)");
  // R_beta < Rhat_beta for all beta, in closed form.
  if (!(d1 < Rhat0)) throw ValidationError("R_0 >= Rhat_0: need d1 < Rhat0");
  for (int b = 1; b < S; ++b)
    if (!(log_R(b) < log_Rhat(b)))
      throw ValidationError("R_beta >= Rhat_beta on the plateau at beta=" + std::to_string(b));
  if (d2 < dhat2) {
    std::ostringstream os;
    os << "R_beta >= Rhat_beta for large beta: d2=" << d2 << " < dhat2=" << dhat2;
    throw ValidationError(os.str());
  }
  if (!(log_R(S) < log_Rhat(S))) {
    std::ostringstream os;
    os << "R_beta >= Rhat_beta at beta=" << S << ": R=" << R(S) << ", Rhat=" << Rhat(S);
    throw ValidationError(os.str());
  }
}

double RadiusSchedule::log_R(int beta) const {
  return std::log(d1_) + d2_ * beta * std::log(q_);
}

double RadiusSchedule::log_Rhat(int beta) const {
  if (beta < S_) return std::log(Rhat0_);
  return std::log(dhat1_) + dhat2_ * beta * std::log(q_);
}

double RadiusSchedule::R(int beta) const { return d1_ * std::pow(q_, d2_ * beta); }

double RadiusSchedule::Rhat(int beta) const {
  if (beta < S_) return Rhat0_;
  return dhat1_ * std::pow(q_, dhat2_ * beta);
}

std::pair<double, double> radius(int beta, const RadiusSchedule& sched) {
  if (beta < 0) throw DomainError("beta must be nonnegative");
  return {sched.R(beta), sched.Rhat(beta)};
}

double canonical_angle(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

double angle_diff(double x, double y) {
  double d = canonical_angle(x - y);
  if (d > std::numbers::pi) d -= kTwoPi;
  return d;
}

double SectorGeometry::nu0() const {
  double r = covering.empty() ? 0.0 : covering.front().radius;
  for (const auto& s : covering) r = std::min(r, s.radius);
  return r;
}

void SectorGeometry::validate() const {
  const std::size_t n = covering.size();
  if (n < 2) throw ValidationError("a good covering needs at least two sectors");
  if (assoc.size() != n || gammas.size() != n)
    throw ValidationError("covering, associated sectors and gammas must have equal length");
  for (const auto& s : covering) {
    if (!(s.opening > 0)) throw ValidationError("degenerate sector with zero opening");
    if (!(s.radius > 0)) throw ValidationError("sector radius must be positive");
  }
  for (const auto& s : assoc)
    if (!(s.opening > 0 && s.opening < std::numbers::pi / 2))
      throw ValidationError("associated sector opening must lie in (0, pi/2)");
  if (!(T.r_T > 0 && T.r_max >= T.r_T)) throw ValidationError("T domain radii invalid");
  if (!(T.arg_hi >= T.arg_lo)) throw ValidationError("T domain direction range invalid");
  if (!(delta2 > 0 && delta2 < 1 && delta3 > 0)) throw ValidationError("delta2/delta3 invalid");
}

AssumptionReport check_assumption_A(const ProblemSpec& spec, const NormParams& norms,
                                    const RadiusSchedule& sched) {
  AssumptionReport rep;
  if (spec.kappa.empty()) {
    rep.vacuous = true;
    return rep;
  }
  const double mlq = -std::log(spec.q);
  for (const auto& k : spec.kappa) {
    for (const auto& [s, poly] : k.b) {
      AssumptionEntry e;
      e.k0 = k.k0;
      e.k1 = k.k1;
      e.s = s;
      const double w = spec.S - k.k1 + s;
      e.slack1 = norms.C * w - k.k0 - 2.0 * k.m1 * norms.M * mlq;
      const double rhs = k.m2 - 2.0 * norms.A1 * w - k.m1 * norms.C;
      e.slack2 = rhs - e.slack1 * sched.d2();
      e.slack1_prime = norms.C * w - k.k0;
      e.slack2_prime = k.m2 - 2.0 * norms.A1 * w;
      if (!std::isfinite(e.slack1) || !std::isfinite(e.slack2))
        throw ValidationError("non-finite slack in assumption (A)");
      e.pass = e.slack1 >= 0.0 && e.slack2 > 0.0;
      e.pass_prime = e.slack1_prime >= 0.0 && e.slack2_prime > 0.0;
      rep.pass = rep.pass && e.pass;
      rep.pass_prime = rep.pass_prime && e.pass_prime;
      rep.entries.push_back(e);
    }
  }
  return rep;
}

ScheduleReport check_assumption_B(const ProblemSpec& spec, const RadiusSchedule& sched,
                                  int B_max) {
  ScheduleReport rep;
  if (spec.kappa.empty()) {
    rep.vacuous = true;
    return rep;
  }
  int need = 0;
  for (const auto& k : spec.kappa)
    for (const auto& [s, p] : k.b) need = std::max(need, k.k1 + s);
  if (B_max < need)
    throw DomainError("B_max=" + std::to_string(B_max) + " below max(kappa1+s)=" +
                      std::to_string(need));

  const double q = spec.q;
  const int S = spec.S;
  const double rel = 1e-12;
  for (const auto& k : spec.kappa) {
    for (const auto& [s, p] : k.b) {
      ScheduleEntry e;
      e.k0 = k.k0;
      e.k1 = k.k1;
      e.s = s;
      const int j = k.k1 + s;
      const double ratio = static_cast<double>(k.m1) / j;
      e.B_closed = sched.d2() <= ratio * (1.0 + rel);
      // (B') only constrains beta >= S; targets below S sit on the plateau.
      const int b0 = std::max(S, j);
      const bool plateau_ok =
          sched.log_Rhat(b0) <= k.m1 * std::log(q) + std::log(sched.Rhat0()) + rel;
      e.Bp_closed = sched.dhat2() >= ratio * (1.0 - rel) && plateau_ok;

      e.B_loop = true;
      for (int b = j; b <= B_max; ++b) {
        const double lhs = sched.R(b);
        const double rhs = std::pow(q, k.m1) * sched.R(b - j);
        if (lhs < rhs * (1.0 - rel)) {
          e.B_loop = false;
          e.B_first_fail = b;
          break;
        }
      }
      e.Bp_loop = true;
      for (int b = b0; b <= B_max; ++b) {
        const double lhs = sched.Rhat(b);
        const double rhs = std::pow(q, k.m1) * sched.Rhat(b - j);
        if (lhs > rhs * (1.0 + rel)) {
          e.Bp_loop = false;
          e.Bp_first_fail = b;
          break;
        }
      }
      rep.pass_B = rep.pass_B && e.B_closed;
      rep.pass_Bp = rep.pass_Bp && e.Bp_closed;
      // Both geometric tests are beta independent, so the loop must agree once it runs.
      if (e.B_loop != e.B_closed) rep.loop_agrees = false;
      if (B_max >= b0 && e.Bp_loop != e.Bp_closed) rep.loop_agrees = false;
      rep.entries.push_back(e);
    }
  }
  const int k10 = spec.max_k1();
  const double mbar = spec.max_m1();
  rep.holomorphy_exponent = sched.dhat2() >= mbar / (S - k10) * (1.0 - rel);
  return rep;
}

CoverReport check_good_covering(const SectorGeometry& geom, int angular_samples) {
  const int nu = geom.nu();
  if (nu < 2) throw ValidationError("nu must be >= 2 for a cyclic covering");
  if (angular_samples < 4 * nu) throw ValidationError("angular_samples must be >= 4 nu");
  for (const auto& s : geom.covering)
    if (!(s.opening > 0)) throw ValidationError("degenerate sector with zero opening");

  CoverReport rep;
  rep.nu0 = geom.nu0();
  rep.overlaps_ok = true;
  for (int i = 0; i < nu; ++i) {
    const auto& A = geom.covering[i];
    const auto& B = geom.covering[(i + 1) % nu];
    const bool full = A.opening >= kTwoPi || B.opening >= kTwoPi;
    const double sep = std::abs(angle_diff(A.dir, B.dir));
    if (!full && !(sep < 0.5 * (A.opening + B.opening))) {
      rep.overlaps_ok = false;
      rep.missing_overlaps.emplace_back(i, (i + 1) % nu);
    }
  }

  // Exact sweep in coordinates relative to the centre of sector 0 (rotation invariant).
  const double start = geom.covering[0].dir;
  bool full = false;
  struct Arc {
    double lo, hi;
  };
  std::vector<Arc> arcs;
  for (int i = 1; i < nu; ++i) {
    const auto& s = geom.covering[i];
    if (s.opening >= kTwoPi) full = true;
    const double lo = canonical_angle(s.dir - 0.5 * s.opening - start);
    arcs.push_back({lo, lo + s.opening});
    // An arc straddling the start also covers the beginning of the sweep.
    if (lo + s.opening > kTwoPi) arcs.push_back({lo - kTwoPi, lo + s.opening - kTwoPi});
  }
  const double h0 = 0.5 * geom.covering[0].opening;
  if (geom.covering[0].opening >= kTwoPi) full = true;
  if (full) {
    rep.coverage_ok = true;
  } else {
    std::sort(arcs.begin(), arcs.end(), [](const Arc& x, const Arc& y) { return x.lo < y.lo; });
    double reach = h0;
    const double end = kTwoPi - h0;
    for (const auto& a : arcs) {
      if (reach > end) break;
      if (a.lo >= reach) {
        rep.gaps.emplace_back(canonical_angle(reach + start),
                              canonical_angle(std::min(a.lo, end) + start));
        reach = std::max(reach, a.hi);
        continue;
      }
      reach = std::max(reach, a.hi);
    }
    if (reach <= end) rep.gaps.emplace_back(canonical_angle(reach + start), canonical_angle(end + start));
    rep.coverage_ok = rep.gaps.empty();
  }

  for (int k = 0; k < angular_samples; ++k) {
    const double phi = start + kTwoPi * k / angular_samples;
    bool hit = false;
    for (const auto& s : geom.covering)
      if (s.opening >= kTwoPi || std::abs(angle_diff(phi, s.dir)) < 0.5 * s.opening) {
        hit = true;
        break;
      }
    if (!hit) rep.uncovered_samples.push_back(canonical_angle(phi));
  }
  rep.pass = rep.overlaps_ok && rep.coverage_ok && rep.uncovered_samples.empty();
  return rep;
}

AssociationReport check_associated_family(const SectorGeometry& geom, const ProblemSpec& spec,
                                          int samples) {
  geom.validate();
  if (samples < 2) throw ValidationError("need at least two samples per direction range");
  AssociationReport rep;
  const double arg_a = std::arg(spec.a);
  for (int i = 0; i < geom.nu(); ++i) {
    AssociationEntry e;
    e.sector = i;
    const double g = geom.gammas[i];
    const auto& St = geom.assoc[i];
    const auto& E = geom.covering[i];
    e.ray_in_assoc = std::abs(angle_diff(g, St.dir)) < 0.5 * St.opening;
    e.assoc_contains_a = std::abs(angle_diff(arg_a, St.dir)) < 0.5 * St.opening;
    e.min_cos = 1.0;
    e.conj_in_assoc = true;
    for (int a = 0; a < samples; ++a) {
      const double ae = E.dir - 0.5 * E.opening + E.opening * a / (samples - 1);
      for (int b = 0; b < samples; ++b) {
        const double at = geom.T.arg_lo + (geom.T.arg_hi - geom.T.arg_lo) * b / (samples - 1);
        e.min_cos = std::min(e.min_cos, std::cos(g + at - ae));
        if (!(std::abs(angle_diff(ae - at, St.dir)) <= 0.5 * St.opening)) e.conj_in_assoc = false;
      }
    }
    e.decay_ok = e.min_cos >= geom.delta2;
    const double da = angle_diff(arg_a, g);
    e.ray_distance_to_a = std::cos(da) <= 0 ? std::abs(spec.a) : std::abs(spec.a) * std::abs(std::sin(da));
    e.ray_far_from_a = e.ray_distance_to_a > geom.delta3;
    e.pole_angle = std::abs(da);
    e.ray_dodges_poles = e.pole_angle >= 1e-3;
    const bool ok = e.ray_in_assoc && e.decay_ok && e.conj_in_assoc && e.ray_far_from_a &&
                    e.ray_dodges_poles;
    rep.pass = rep.pass && ok;
    rep.entries.push_back(e);
  }
  return rep;
}

}  // namespace qgevrey
