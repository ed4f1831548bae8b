#include "qgevrey/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "qgevrey/borel_recursion.hpp"
#include "qgevrey/cauchy_heine.hpp"
#include "qgevrey/csv.hpp"
#include "qgevrey/laplace_summation.hpp"
#include "qgevrey/qgevrey_asymptotics.hpp"
#include "qgevrey/weighted_norms.hpp"

namespace qgevrey {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

[[noreturn]] void fail(const std::string& where, const std::string& msg) {
  throw ValidationError((where.empty() ? std::string("/") : where) + ": " + msg);
}

std::string at(const std::string& where, const std::string& key) { return where + "/" + key; }
std::string at(const std::string& where, std::size_t i) { return where + "/" + std::to_string(i); }

const json& require(const json& obj, const std::string& where, const std::string& key) {
  if (!obj.is_object()) fail(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(at(where, key), "missing required field");
  return *it;
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(where, "expected a finite number");
  return v;
}

int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  return j.get<int>();
}

cplx complex_value(const json& j, const std::string& where) {
  if (j.is_number()) return {number(j, where), 0.0};
  if (!j.is_array() || j.size() != 2) fail(where, "expected a number or [re, im]");
  return {number(j[0], at(where, 0)), number(j[1], at(where, 1))};
}

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }))
      fail(at(where, it.key()), "unknown field");
  }
}

template <typename F>
auto rethrow_at(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ValidationError(where + ": " + e.what());
  }
}

double opt_number(const json& obj, const std::string& where, const char* key, double def) {
  auto it = obj.find(key);
  return it == obj.end() ? def : number(*it, at(where, key));
}

ProblemSpec parse_problem(const json& j, const std::string& where) {
  only_keys(j, where, {"S", "a", "q", "r0", "kappa", "initial_data"});
  ProblemSpec p;
  p.S = integer(require(j, where, "S"), at(where, "S"));
  p.a = complex_value(require(j, where, "a"), at(where, "a"));
  p.q = number(require(j, where, "q"), at(where, "q"));
  p.r0 = opt_number(j, where, "r0", 1.0);
  const std::string kw = at(where, "kappa");
  const json& ks = require(j, where, "kappa");
  if (!ks.is_array()) fail(kw, "expected an array");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const std::string w = at(kw, i);
    only_keys(ks[i], w, {"k0", "k1", "m1", "m2", "b"});
    KappaEntry e;
    e.k0 = integer(require(ks[i], w, "k0"), at(w, "k0"));
    e.k1 = integer(require(ks[i], w, "k1"), at(w, "k1"));
    e.m1 = integer(require(ks[i], w, "m1"), at(w, "m1"));
    e.m2 = integer(require(ks[i], w, "m2"), at(w, "m2"));
    const json& b = require(ks[i], w, "b");
    const std::string bw = at(w, "b");
    if (!b.is_object() || b.empty()) fail(bw, "expected a nonempty object keyed by s");
    for (auto it = b.begin(); it != b.end(); ++it) {
      const std::string sw = at(bw, it.key());
      int s = 0;
      try {
        std::size_t used = 0;
        s = std::stoi(it.key(), &used);
        if (used != it.key().size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        fail(sw, "key must be a nonnegative integer");
      }
      if (!it->is_array() || it->empty()) fail(sw, "expected a nonempty coefficient array");
      std::vector<cplx> c;
      for (std::size_t k = 0; k < it->size(); ++k) c.push_back(complex_value((*it)[k], at(sw, k)));
      e.b[s] = EpsPoly(std::move(c));
    }
    p.kappa.push_back(std::move(e));
  }
  const std::string iw = at(where, "initial_data");
  const json& ini = require(j, where, "initial_data");
  if (!ini.is_array()) fail(iw, "expected an array");
  for (std::size_t h = 0; h < ini.size(); ++h) {
    const std::string hw = at(iw, h);
    std::vector<InitTerm> terms;
    auto read_term = [&](const json& t, const std::string& tw) {
      InitTerm term;
      if (t.is_number() || t.is_array()) {
        term.c = complex_value(t, tw);
      } else {
        only_keys(t, tw, {"c", "eps_power", "tau_power", "pole_order"});
        term.c = complex_value(require(t, tw, "c"), at(tw, "c"));
        if (t.contains("eps_power")) term.eps_power = integer(t["eps_power"], at(tw, "eps_power"));
        if (t.contains("tau_power")) term.tau_power = integer(t["tau_power"], at(tw, "tau_power"));
        if (t.contains("pole_order"))
          term.pole_order = integer(t["pole_order"], at(tw, "pole_order"));
      }
      terms.push_back(term);
    };
    if (ini[h].is_object() || ini[h].is_number()) {
      read_term(ini[h], hw);
    } else if (ini[h].is_array() && !ini[h].empty() && !ini[h][0].is_number()) {
      for (std::size_t k = 0; k < ini[h].size(); ++k) read_term(ini[h][k], at(hw, k));
    } else if (ini[h].is_array() && ini[h].empty()) {
      // W_h = 0
    } else {
      read_term(ini[h], hw);
    }
    p.initial_data.push_back(std::move(terms));
  }
  rethrow_at(where, [&] {
    p.validate();
    return 0;
  });
  return p;
}

NormParams parse_norms(const json& j, const std::string& where, const ProblemSpec& spec) {
  only_keys(j, where,
            {"M", "A1", "C", "delta1", "M_tilde", "K0", "Delta_ic", "delta_series"});
  NormParams n;
  n.M = number(require(j, where, "M"), at(where, "M"));
  n.A1 = number(require(j, where, "A1"), at(where, "A1"));
  n.C = number(require(j, where, "C"), at(where, "C"));
  n.delta1 = number(require(j, where, "delta1"), at(where, "delta1"));
  n.M_tilde = opt_number(j, where, "M_tilde", n.M_tilde);
  if (j.contains("K0")) n.K0 = integer(j["K0"], at(where, "K0"));
  n.Delta_ic = opt_number(j, where, "Delta_ic", n.Delta_ic);
  n.delta_series = opt_number(j, where, "delta_series", n.delta_series);
  rethrow_at(where, [&] {
    n.validate(spec);
    return 0;
  });
  return n;
}

RadiusSchedule parse_schedule(const json& j, const std::string& where, const ProblemSpec& spec) {
  only_keys(j, where, {"d1", "d2", "dhat1", "dhat2", "Rhat0"});
  auto g = [&](const char* k) { return number(require(j, where, k), at(where, k)); };
  const double d1 = g("d1"), d2 = g("d2"), dh1 = g("dhat1"), dh2 = g("dhat2"), r0 = g("Rhat0");
  return rethrow_at(where, [&] { return RadiusSchedule(d1, d2, dh1, dh2, r0, spec.S, spec.q); });
}

SectorGeometry parse_geometry(const json& j, const std::string& where, double scale) {
  only_keys(j, where, {"covering", "assoc", "T", "gammas", "delta2", "delta3"});
  SectorGeometry g;
  const std::string cw = at(where, "covering");
  const json& cov = require(j, where, "covering");
  if (!cov.is_array() || cov.empty()) fail(cw, "expected a nonempty array");
  for (std::size_t i = 0; i < cov.size(); ++i) {
    const std::string w = at(cw, i);
    only_keys(cov[i], w, {"dir", "opening", "radius"});
    Sector s;
    s.dir = scale * number(require(cov[i], w, "dir"), at(w, "dir"));
    s.opening = scale * number(require(cov[i], w, "opening"), at(w, "opening"));
    s.radius = number(require(cov[i], w, "radius"), at(w, "radius"));
    g.covering.push_back(s);
  }
  const std::string aw = at(where, "assoc");
  const json& as = require(j, where, "assoc");
  if (!as.is_array()) fail(aw, "expected an array");
  for (std::size_t i = 0; i < as.size(); ++i) {
    const std::string w = at(aw, i);
    only_keys(as[i], w, {"dir", "opening"});
    AssocSector s;
    s.dir = scale * number(require(as[i], w, "dir"), at(w, "dir"));
    s.opening = scale * number(require(as[i], w, "opening"), at(w, "opening"));
    g.assoc.push_back(s);
  }
  const std::string tw = at(where, "T");
  const json& T = require(j, where, "T");
  only_keys(T, tw, {"arg_lo", "arg_hi", "r_T", "r_max"});
  g.T.arg_lo = scale * number(require(T, tw, "arg_lo"), at(tw, "arg_lo"));
  g.T.arg_hi = scale * number(require(T, tw, "arg_hi"), at(tw, "arg_hi"));
  g.T.r_T = number(require(T, tw, "r_T"), at(tw, "r_T"));
  g.T.r_max = opt_number(T, tw, "r_max", 2.0 * g.T.r_T);
  const std::string gw = at(where, "gammas");
  const json& gs = require(j, where, "gammas");
  if (!gs.is_array()) fail(gw, "expected an array");
  for (std::size_t i = 0; i < gs.size(); ++i) g.gammas.push_back(scale * number(gs[i], at(gw, i)));
  g.delta2 = number(require(j, where, "delta2"), at(where, "delta2"));
  g.delta3 = number(require(j, where, "delta3"), at(where, "delta3"));
  rethrow_at(where, [&] {
    g.validate();
    return 0;
  });
  return g;
}

// Allowed parameter keys per block.
const std::map<std::string, std::vector<std::string>>& block_keys() {
  static const std::map<std::string, std::vector<std::string>> keys = {
      {"assumptions", {"B_max", "angular_samples", "assoc_samples"}},
      {"borel", {"B_max", "residual_B", "points", "tol", "dump_max"}},
      {"norms",
       {"B_max", "eps", "sector", "half_width", "r_outer", "radial", "angular",
        "max_refinements", "rel_tol"}},
      {"solve", {"sector", "B_max", "eps", "t", "monomial_max", "t_points", "tol"}},
      {"residual",
       {"sector", "B_max", "points", "tol", "eps_min", "eps_max", "eps_half_width", "t_min",
        "t_max", "z_max"}},
      {"cocycle",
       {"sectors", "B_max", "eps_min", "eps_max", "points", "eps_arg", "t", "z", "Delta",
        "factor"}},
      {"dirichlet",
       {"D1", "D2", "A1", "d2", "q", "Delta", "eps_max", "eps_min", "points", "em_tol"}},
      {"asymptotics",
       {"types", "q", "tol", "eps_min", "eps_max", "points", "watson_type", "watson_x_lo",
        "watson_x_hi", "watson_points", "watson_tol", "gaussian_a", "gaussian_tol",
        "expansion_A", "expansion_N", "expansion_C1"}},
      {"cauchy-heine",
       {"L", "q", "r", "eta", "m_max", "gap_tol", "ratio_tol", "grid_radii", "grid_angles",
        "eps_radii", "eps_half_width", "L_hat_factor", "negative_factor", "shared_tol"}},
  };
  return keys;
}

// Positive tolerances and nonempty grids, checked at parse time.
void check_block_params(const Block& b, const std::string& where) {
  const auto& allowed = block_keys().at(b.name);
  for (auto it = b.params.begin(); it != b.params.end(); ++it) {
    if (it.key() == "block") continue;
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      fail(at(where, it.key()), "unknown field for block '" + b.name + "'");
    const std::string w = at(where, it.key());
    const std::string& k = it.key();
    const bool is_tol = k == "tol" || (k.size() > 4 && k.substr(k.size() - 4) == "_tol");
    if (is_tol && !(number(*it, w) > 0)) fail(w, "tolerance must be positive");
    if (it->is_array() && it->empty()) fail(w, "grid must be nonempty");
  }
}

bool valid_path_component(const std::string& s) {
  if (s.empty() || s == "." || s == "..") return false;
  return std::none_of(s.begin(), s.end(), [](char c) {
    return c == '/' || c == '\\' || c == '\0' || static_cast<unsigned char>(c) < 0x20;
  });
}

// Typed, defaulted access to one block's parameters.
class Params {
 public:
  Params(const json& j, std::string where, double scale)
      : j_(j), where_(std::move(where)), scale_(scale) {}

  double num(const char* k, double def) const {
    return j_.contains(k) ? number(j_[k], at(where_, k)) : def;
  }
  int integer_or(const char* k, int def) const {
    return j_.contains(k) ? integer(j_[k], at(where_, k)) : def;
  }
  // Angles in the configured unit; the default is in radians.
  double angle(const char* k, double def_rad) const {
    return j_.contains(k) ? scale_ * number(j_[k], at(where_, k)) : def_rad;
  }
  std::vector<double> nums(const char* k, std::vector<double> def) const {
    if (!j_.contains(k)) return def;
    const json& a = j_[k];
    if (!a.is_array()) fail(at(where_, k), "expected an array");
    std::vector<double> v;
    for (std::size_t i = 0; i < a.size(); ++i) v.push_back(number(a[i], at(at(where_, k), i)));
    return v;
  }
  std::vector<double> angles(const char* k, std::vector<double> def_rad) const {
    if (!j_.contains(k)) return def_rad;
    auto v = nums(k, {});
    for (auto& x : v) x *= scale_;
    return v;
  }
  std::vector<int> ints(const char* k, std::vector<int> def) const {
    if (!j_.contains(k)) return def;
    const json& a = j_[k];
    if (!a.is_array()) fail(at(where_, k), "expected an array");
    std::vector<int> v;
    for (std::size_t i = 0; i < a.size(); ++i) v.push_back(integer(a[i], at(at(where_, k), i)));
    return v;
  }
  std::vector<cplx> cplxs(const char* k, std::vector<cplx> def) const {
    if (!j_.contains(k)) return def;
    const json& a = j_[k];
    if (!a.is_array()) fail(at(where_, k), "expected an array");
    std::vector<cplx> v;
    for (std::size_t i = 0; i < a.size(); ++i) v.push_back(complex_value(a[i], at(at(where_, k), i)));
    return v;
  }
  const std::string& where() const { return where_; }

 private:
  const json& j_;
  std::string where_;
  double scale_;
};

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> v;
  if (n == 1) return {hi};
  for (int k = 0; k < n; ++k) v.push_back(hi * std::pow(lo / hi, double(k) / (n - 1)));
  return v;
}

// Uniform double in [0, 1) from the top 53 bits; independent of the standard library's
// distribution implementation.
double uniform01(std::mt19937_64& g) { return double(g() >> 11) * 0x1.0p-53; }
double uniform(std::mt19937_64& g, double lo, double hi) { return lo + (hi - lo) * uniform01(g); }
double log_uniform(std::mt19937_64& g, double lo, double hi) {
  return std::exp(uniform(g, std::log(lo), std::log(hi)));
}

struct Context {
  const Scenario& sc;
  const RunOptions& opt;
  RunResult& res;
  std::string block;
  std::shared_ptr<CoefficientTable> table;
  std::mt19937_64 rng;

  fs::path file(const std::string& name) {
    res.files.push_back(name);
    return opt.out_dir / name;
  }
  void check(const std::string& name, double measured, double tol, const std::string& rel,
             bool pass) {
    res.checks.push_back({block, name, measured, tol, rel, pass});
  }
  void check_le(const std::string& name, double measured, double tol) {
    check(name, measured, tol, "<=", measured <= tol);
  }
  void check_lt(const std::string& name, double measured, double tol) {
    check(name, measured, tol, "<", measured < tol);
  }
  void check_flag(const std::string& name, bool ok) { check(name, ok ? 1 : 0, 1, "==", ok); }
  const RadiusSchedule& schedule() const {
    if (!sc.schedule) throw ValidationError("/schedule: required by block '" + block + "'");
    return *sc.schedule;
  }
  int sector(int i) const {
    if (i < 0 || i >= sc.geometry.nu())
      throw ValidationError("/run_plan: sector index " + std::to_string(i) + " out of range");
    return i;
  }
};

void run_assumptions(Context& c, const Params& p) {
  const auto& sched = c.schedule();
  const int B_max = p.integer_or("B_max", 40);
  const auto A = check_assumption_A(c.sc.problem, c.sc.norms, sched);
  const auto B = check_assumption_B(c.sc.problem, sched, B_max);
  const auto cov =
      check_good_covering(c.sc.geometry, p.integer_or("angular_samples", 720));
  const auto assoc =
      check_associated_family(c.sc.geometry, c.sc.problem, p.integer_or("assoc_samples", 33));

  CsvWriter w(c.file("assumptions.csv"),
              {"k0", "k1", "s", "slack1", "slack2", "slack1_prime", "slack2_prime", "A_pass",
               "A_prime_pass", "B_closed", "B_loop", "Bp_closed", "Bp_loop"});
  for (std::size_t i = 0; i < A.entries.size(); ++i) {
    const auto& e = A.entries[i];
    w << e.k0 << e.k1 << e.s << e.slack1 << e.slack2 << e.slack1_prime << e.slack2_prime
      << int(e.pass) << int(e.pass_prime);
    if (i < B.entries.size()) {
      const auto& b = B.entries[i];
      w << int(b.B_closed) << int(b.B_loop) << int(b.Bp_closed) << int(b.Bp_loop);
    } else {
      w << -1 << -1 << -1 << -1;
    }
    w.end_row();
  }

  double min_slack = std::numeric_limits<double>::infinity();
  for (const auto& e : A.entries) min_slack = std::min({min_slack, e.slack1, e.slack2});
  c.check("assumption_A", A.entries.empty() ? 0.0 : min_slack, 0, ">=", A.pass);
  c.check_flag("assumption_A_prime", !A.pass || A.pass_prime);
  c.check_flag("assumption_B", B.pass_B);
  c.check_flag("assumption_B_prime", B.pass_Bp);
  c.check_flag("schedule_loop_agrees", B.loop_agrees);
  c.check_flag("holomorphy_exponent", B.holomorphy_exponent);
  c.check("good_covering", double(cov.gaps.size()), 0, "==", cov.pass);
  double min_cos = std::numeric_limits<double>::infinity();
  for (const auto& e : assoc.entries) min_cos = std::min(min_cos, e.min_cos);
  c.check("associated_family", min_cos, c.sc.geometry.delta2, ">=", assoc.pass);
}

void run_borel(Context& c, const Params& p) {
  const auto& sched = c.schedule();
  const auto& spec = c.sc.problem;
  const int B_max = p.integer_or("B_max", 40);
  const int Bres = p.integer_or("residual_B", 12);
  const int points = p.integer_or("points", 27);
  const double tol = p.num("tol", 1e-10);
  const int dump_max = p.integer_or("dump_max", 12);

  const auto rows = holomorphy_check(*c.table, sched, B_max);
  {
    CsvWriter w(c.file("borel_holomorphy.csv"), {"beta", "max_k", "min_modulus", "Rhat", "pass"});
    for (const auto& r : rows) w << r.beta << r.max_k << r.min_modulus << r.Rhat << int(r.pass), w.end_row();
  }
  double worst = std::numeric_limits<double>::infinity();
  bool hol_ok = true;
  for (const auto& r : rows) {
    hol_ok = hol_ok && r.pass;
    if (std::isfinite(r.min_modulus)) worst = std::min(worst, r.min_modulus / r.Rhat);
  }
  c.check("holomorphy_domain", std::isfinite(worst) ? worst : 1.0, 1.0, ">=", hol_ok);

  // Random (eps, tau) off the singularity ledger.
  const double a_abs = std::abs(spec.a);
  const double q = spec.q;
  double max_res = 0.0;
  CsvWriter w(c.file("borel_residual.csv"),
              {"point", "eps_re", "eps_im", "tau_re", "tau_im", "order", "residual"});
  for (int i = 0; i < points; ++i) {
    cplx eps, tau;
    for (;;) {
      eps = std::polar(log_uniform(c.rng, 0.02, 0.5) * spec.r0, uniform(c.rng, -kPi, kPi));
      tau = std::polar(log_uniform(c.rng, 1e-2, 3.0), uniform(c.rng, -kPi, kPi));
      bool near = false;
      for (int k = -4; k <= 200 && !near; ++k) {
        const double qk = std::pow(q, k);
        if (a_abs * qk < 1e-3 * std::abs(tau)) break;
        near = std::abs(tau - spec.a * qk) < 0.05 * a_abs * qk;
      }
      if (!near) break;
    }
    for (const auto& r : series_residual(*c.table, Bres, eps, tau)) {
      w << i << eps.real() << eps.imag() << tau.real() << tau.imag() << r.order << r.residual;
      w.end_row();
      max_res = std::max(max_res, r.residual);
    }
  }
  c.check_lt("series_residual", max_res, tol);

  const fs::path dir = c.opt.cache_dir.empty() ? c.opt.out_dir / "coefficients" : c.opt.cache_dir;
  fs::create_directories(dir);
  for (int b = 0; b <= dump_max; ++b) {
    char name[32];
    std::snprintf(name, sizeof name, "W_%03d.txt", b);
    std::ofstream os(dir / name);
    if (!os) throw ResourceError("cannot write " + (dir / name).string());
    dump_coefficient(*c.table->get(b), os);
  }
}

void run_norms(Context& c, const Params& p) {
  const auto& sched = c.schedule();
  const int B_max = p.integer_or("B_max", 10);
  const int sec = c.sector(p.integer_or("sector", 0));
  const double g = c.sc.geometry.gammas[sec];
  std::vector<cplx> eps_default;
  for (double r : {0.05, 0.1, 0.2}) eps_default.push_back(std::polar(r * c.sc.problem.r0, g));
  const auto eps = p.cplxs("eps", eps_default);
  NormGrid grid;
  const double hw = p.angle("half_width", 0.2);
  grid.arg_lo = g - hw;
  grid.arg_hi = g + hw;
  grid.r_outer = p.num("r_outer", grid.r_outer);
  grid.radial = p.integer_or("radial", grid.radial);
  grid.angular = p.integer_or("angular", grid.angular);
  grid.max_refinements = p.integer_or("max_refinements", 3);
  grid.rel_tol = p.num("rel_tol", grid.rel_tol);

  const int n = int(eps.size()) * (B_max + 1);
  std::vector<NormEstimate> outer(n), inner(n);
  std::vector<std::shared_ptr<const BorelCoefficient>> coefs;
  for (int b = 0; b <= B_max; ++b) coefs.push_back(c.table->get(b));
  parallel_for(std::size_t(n), c.opt.threads, [&](std::size_t k) {
    const int e = int(k) / (B_max + 1), b = int(k) % (B_max + 1);
    outer[k] = outer_norm(*coefs[b], eps[e], c.sc.norms, sched, grid);
    inner[k] = inner_norm(*coefs[b], eps[e], c.sc.norms, sched, grid);
  });
  auto emit = [&](const std::string& name, const std::vector<NormEstimate>& v) {
    CsvWriter w(c.file(name), {"beta", "eps_re", "eps_im", "norm", "argmax_tau_re", "argmax_tau_im"});
    for (const auto& r : v) {
      w << r.beta << r.eps.real() << r.eps.imag() << r.value << r.argmax_tau.real()
        << r.argmax_tau.imag();
      w.end_row();
    }
  };
  emit("norms_outer.csv", outer);
  emit("norms_inner.csv", inner);

  CsvWriter fw(c.file("norms_fit.csv"),
               {"kind", "eps_re", "eps_im", "C_amp", "C_rate", "min_slack", "degenerate"});
  double min_slack = std::numeric_limits<double>::infinity();
  for (int kind = 0; kind < 2; ++kind) {
    const auto& v = kind == 0 ? outer : inner;
    for (std::size_t e = 0; e < eps.size(); ++e) {
      std::vector<double> seq;
      for (int b = 0; b <= B_max; ++b) seq.push_back(v[e * (B_max + 1) + b].value);
      const auto fit = fit_growth(seq, c.sc.norms);
      double s = std::numeric_limits<double>::infinity();
      for (double x : fit.slack) s = std::min(s, x);
      min_slack = std::min(min_slack, s);
      fw << std::string(kind == 0 ? "outer" : "inner") << eps[e].real() << eps[e].imag()
         << fit.C_amp << fit.C_rate << s << int(fit.degenerate);
      fw.end_row();
    }
  }
  c.check("growth_envelope", min_slack, -1e-12, ">=", min_slack >= -1e-12);
}

void run_solve(Context& c, const Params& p) {
  const int sec = c.sector(p.integer_or("sector", 0));
  const int B_max = p.integer_or("B_max", 12);
  const double g = c.sc.geometry.gammas[sec];
  const double tol = p.num("tol", 1e-8);
  const auto& T = c.sc.geometry.T;
  const double tmid = 0.5 * (T.arg_lo + T.arg_hi);
  const double emid = c.sc.geometry.covering[sec].dir;
  std::vector<cplx> eps_default, t_default;
  for (double r : {0.05, 0.1}) eps_default.push_back(std::polar(r * c.sc.problem.r0, emid));
  for (double r : {1.0, 1.5}) t_default.push_back(std::polar(r * T.r_T, tmid));
  const auto eps = p.cplxs("eps", eps_default);
  const auto ts = p.cplxs("t", t_default);

  QuadraturePlan plan;
  auto sol = build_solution(c.table, c.sc.geometry, sec, B_max, plan, c.sc.norms.A1);
  const int n = int(eps.size() * ts.size()) * (B_max + 1);
  std::vector<LaplaceResult> X(n);
  parallel_for(std::size_t(n), c.opt.threads, [&](std::size_t k) {
    const int b = int(k) % (B_max + 1);
    const std::size_t et = k / (B_max + 1);
    X[k] = sol->X(b, eps[et / ts.size()], ts[et % ts.size()]);
  });
  {
    CsvWriter w(c.file("solve.csv"),
                {"beta", "eps_re", "eps_im", "t_re", "t_im", "X_re", "X_im", "error"});
    for (int k = 0; k < n; ++k) {
      const int b = k % (B_max + 1);
      const std::size_t et = k / (B_max + 1);
      const cplx e = eps[et / ts.size()], t = ts[et % ts.size()];
      w << b << e.real() << e.imag() << t.real() << t.imag() << X[k].value.real()
        << X[k].value.imag() << X[k].error;
      w.end_row();
    }
  }

  // Monomial identity on the direction 0 with eps = 1.
  const int m_max = p.integer_or("monomial_max", 8);
  const int tp = p.integer_or("t_points", 10);
  double worst = 0.0;
  for (int m = 0; m <= m_max; ++m) {
    for (int k = 0; k < tp; ++k) {
      const double arg = tp == 1 ? 0.0 : -1.0 + 2.0 * k / (tp - 1);
      const cplx t = std::polar(1.0 + k / 3.0, arg);
      auto f = [m](cplx tau) { return ipow(tau, m); };
      const auto r = laplace_ray(f, 0.0, t, 1.0, plan, GrowthBound{1.0, m});
      const cplx exact = std::tgamma(m + 1.0) / ipow(t, m + 1);
      worst = std::max(worst, std::abs(r.value - exact) / std::abs(exact));
    }
  }
  c.check_le("laplace_monomial", worst, tol);

  auto f = [](cplx tau) { return std::exp(-tau); };
  const auto d = laplace_derivative_check(f, 0.0, 2.0, 1.0, 1e-3, plan, GrowthBound{1.0, 0});
  c.check("laplace_derivative", d.gap, d.threshold, "<=", d.pass);
  (void)g;
}

void run_residual(Context& c, const Params& p) {
  const int sec = c.sector(p.integer_or("sector", 0));
  const int B_max = p.integer_or("B_max", 12);
  const int points = p.integer_or("points", 27);
  const double tol = p.num("tol", 1e-6);
  const double e_lo = p.num("eps_min", 0.02), e_hi = p.num("eps_max", 0.3);
  const double hw = p.angle("eps_half_width", kPi / 6);
  const auto& T = c.sc.geometry.T;
  const double t_lo = p.num("t_min", T.r_T), t_hi = p.num("t_max", std::min(2 * T.r_T, T.r_max));
  const double z_max = p.num("z_max", 0.5);
  const double dir = c.sc.geometry.covering[sec].dir;

  std::vector<ResidualSample> samples;
  for (int i = 0; i < points; ++i) {
    ResidualSample s;
    s.eps = std::polar(log_uniform(c.rng, e_lo, e_hi) * c.sc.problem.r0, dir + uniform(c.rng, -hw, hw));
    s.t = std::polar(uniform(c.rng, t_lo, t_hi), uniform(c.rng, T.arg_lo, T.arg_hi));
    s.z = std::polar(z_max * std::sqrt(uniform01(c.rng)), uniform(c.rng, -kPi, kPi));
    samples.push_back(s);
  }
  auto sol = build_solution(c.table, c.sc.geometry, sec, B_max, QuadraturePlan{}, c.sc.norms.A1);
  const auto rep = pde_residual(*sol, samples, c.opt.threads);
  CsvWriter w(c.file("residual.csv"),
              {"eps_re", "eps_im", "t_re", "t_im", "z_re", "z_im", "residual"});
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    w << s.eps.real() << s.eps.imag() << s.t.real() << s.t.imag() << s.z.real() << s.z.imag()
      << rep.residuals[i];
    w.end_row();
  }
  c.check_lt("pde_residual", rep.max_residual, tol);
}

void run_cocycle(Context& c, const Params& p) {
  const auto& sched = c.schedule();
  const auto secs = p.ints("sectors", {0, 1});
  if (secs.size() != 2) throw ValidationError(p.where() + "/sectors: expected two sector indices");
  const int si = c.sector(secs[0]), sj = c.sector(secs[1]);
  const int B_max = p.integer_or("B_max", 12);
  const double gi = c.sc.geometry.gammas[si], gj = c.sc.geometry.gammas[sj];
  const double arg = p.angle("eps_arg", gi + 0.5 * angle_diff(gj, gi));
  const auto radii = log_grid(p.num("eps_min", 1e-3), p.num("eps_max", 1e-1), p.integer_or("points", 12));
  const auto& T = c.sc.geometry.T;
  const double tm = 0.5 * (T.arg_lo + T.arg_hi);
  const auto ts = p.cplxs("t", {std::polar(T.r_T, tm), std::polar(1.5 * T.r_T, tm)});
  const auto zs = p.cplxs("z", {0.25, 0.5});
  const double Delta = p.num("Delta", 1.1);
  const double factor = p.num("factor", 0.9);

  std::vector<cplx> eps;
  for (double r : radii) eps.push_back(std::polar(r * c.sc.problem.r0, arg));
  QuadraturePlan plan;
  auto sol_i = build_solution(c.table, c.sc.geometry, si, B_max, plan, c.sc.norms.A1);
  auto sol_j = build_solution(c.table, c.sc.geometry, sj, B_max, plan, c.sc.norms.A1);
  const auto fit = cocycle_difference(*sol_i, *sol_j, eps, ts, zs, true, c.opt.threads);
  const double floor = cocycle_floor(c.sc.norms.A1, sched.d2(), Delta, c.sc.problem.q);

  CsvWriter w(c.file("cocycle.csv"), {"eps_abs", "D", "fitted"});
  for (std::size_t k = 0; k < fit.eps_abs.size(); ++k) {
    const double l = std::log(fit.eps_abs[k]);
    w << fit.eps_abs[k] << fit.D[k] << std::exp(-fit.c_hat * l * l + fit.intercept);
    w.end_row();
  }
  const double need = factor * floor;
  c.check("cocycle_decay", fit.underflow ? std::numeric_limits<double>::infinity() : fit.c_hat, need,
          ">=", fit.underflow || fit.c_hat >= need);
}

void run_dirichlet(Context& c, const Params& p) {
  DirichletParams d;
  d.D1 = p.num("D1", 2.0);
  d.D2 = p.num("D2", 2.0);
  d.A1 = p.num("A1", 1.0);
  d.d2 = p.num("d2", 1.0);
  d.q = p.num("q", 0.5);
  const double Delta = p.num("Delta", 1.1);
  if (!(Delta > 1)) throw HypothesisError("Delta must exceed 1");
  rethrow_at(p.where(), [&] {
    d.validate();
    return 0;
  });
  const auto grid = log_grid(p.num("eps_min", 1e-4), p.num("eps_max", 1e-1), p.integer_or("points", 10));
  const auto rep = dirichlet_bound_check(d, Delta, grid);

  CsvWriter w(c.file("dirichlet.csv"), {"eps", "direct_sum", "em_sum", "bound", "E1_fit"});
  for (double e : grid) {
    const auto s = dirichlet_direct(d, e);
    const auto em = dirichlet_euler_maclaurin(d, e, euler_maclaurin_cutoff(d, e));
    const double env = std::exp(dirichlet_log_envelope(d, Delta, e));
    w << e << s.sum << em.value << rep.E1 * env << (env > 0 ? s.sum / env : 0.0);
    w.end_row();
  }
  c.check_le("dirichlet_E1_stability", rep.rel_change, 0.1);

  const double em_tol = p.num("em_tol", 1e-8);
  double worst = 0.0;
  CsvWriter iw(c.file("dirichlet_identity.csv"),
               {"D1", "A1", "eps", "direct_sum", "em_sum", "rel_diff"});
  for (double D1 : {1.0, 2.0}) {
    for (double A1 : {0.5, 1.0}) {
      for (double e : {0.05, 0.2, 1.0}) {
        DirichletParams x = d;
        x.D1 = D1;
        x.A1 = A1;
        const double direct = dirichlet_direct(x, e).sum;
        const double em = dirichlet_euler_maclaurin(x, e, euler_maclaurin_cutoff(x, e)).value;
        const double rel = std::abs(em - direct) / std::abs(direct);
        worst = std::max(worst, rel);
        iw << D1 << A1 << e << direct << em << rel;
        iw.end_row();
      }
    }
  }
  c.check_le("euler_maclaurin_identity", worst, em_tol);
}

void run_asymptotics(Context& c, const Params& p) {
  const double q = p.num("q", 0.5);
  const double tol = p.num("tol", 0.1);
  const auto types = p.nums("types", {0.5, 1.0, 2.0});
  const auto grid = log_grid(p.num("eps_min", 1e-6), p.num("eps_max", 1e-1), p.integer_or("points", 24));
  const double lq = -std::log(q);
  CsvWriter w(c.file("asymptotics.csv"),
              {"kind", "parameter", "fitted_type", "r_squared", "measured", "pass"});
  for (double A : types) {
    std::vector<std::pair<double, double>> s;
    for (double e : grid) {
      const double l = std::log(e);
      s.emplace_back(e, (2.0 + std::cos(l)) * std::exp(-l * l / (2 * A * lq)));
    }
    const auto fit = fit_flat_type(s, q);
    const double rel = std::abs(fit.fitted_type / A - 1);
    const bool ok = fit.flat && rel <= tol;
    w << std::string("type_roundtrip") << A << fit.fitted_type << fit.r_squared << rel << int(ok);
    w.end_row();
    std::ostringstream name;
    name << "flat_type_A=" << A;
    c.check(name.str(), rel, tol, "<=", ok);
  }

  const double Aw = p.num("watson_type", 1.0);
  const long double lql = -std::log((long double)q);
  std::function<long double(long double)> f = [Aw, lql](long double s) {
    const long double l = std::log(s);
    return std::exp(-l * l / (2 * (long double)Aw * lql));
  };
  const auto wr = watson_transfer<long double>(f, 1.0L, p.num("watson_x_lo", 1e-20),
                                               p.num("watson_x_hi", 1e-6),
                                               p.integer_or("watson_points", 16), q,
                                               p.num("watson_tol", 0.15));
  w << std::string("watson") << Aw << wr.fit_I.fitted_type << wr.fit_I.r_squared << wr.degradation
    << int(wr.pass);
  w.end_row();
  c.check("watson_transfer", std::abs(wr.degradation), p.num("watson_tol", 0.15), "<=", wr.pass);

  double gworst = 0.0;
  for (double a : p.nums("gaussian_a", {0, 1, -1, 2, -2})) {
    const double exact = std::exp(a * a / 4) * std::sqrt(kPi);
    const double got = gaussian_moment(a);
    const double err = std::abs(got - exact);
    gworst = std::max(gworst, err);
    w << std::string("gaussian") << a << got << exact << err << int(err <= 1e-10);
    w.end_row();
  }
  c.check_le("gaussian_identity", gworst, p.num("gaussian_tol", 1e-10));

  // 1/(1 - eps) plus a flat term of type 1: all-ones coefficients, remainder of type A for A >= 1
  // once C1 absorbs the low orders (C1_min is about 12 at A = 2, q = 1/2).
  const double Ae = p.num("expansion_A", 2.0);
  const int N = p.integer_or("expansion_N", 12);
  std::vector<std::pair<cplx, cplx>> samples;
  for (double r : {0.02, 0.05, 0.1, 0.2}) {
    for (double th : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
      const cplx e = std::polar(r, th);
      const double l = std::log(r);
      samples.emplace_back(e, 1.0 / (1.0 - e) + std::exp(-l * l / (2 * lq)));
    }
  }
  const double C1 = p.num("expansion_C1", 16.0);
  const auto ex = check_expansion(samples, std::vector<cplx>(N + 1, 1.0), Ae, 1.0, C1, q);
  w << std::string("expansion") << Ae << ex.H_min << ex.C1_min << double(ex.rows.size()) << int(ex.pass);
  w.end_row();
  c.check("expansion_bound", ex.C1_min, C1, "<=", ex.pass);
}

void run_cauchy_heine(Context& c, const Params& p) {
  const double L = p.num("L", 1.0);
  const double q = p.num("q", 0.5);
  const auto data = gaussian_cocycle(L, q, p.num("r", 1.0), p.num("eta", 0.5));
  std::vector<cplx> grid;
  for (double s : p.nums("grid_radii", {0.25, 0.4, 0.55}))
    for (double ph : p.angles("grid_angles", {-0.25, 0.15, 0.3}))
      grid.push_back(std::polar(s * data.r, data.theta[0] + ph));
  const auto cb = coboundary_check(data, 0, grid, c.opt.threads);
  {
    CsvWriter w(c.file("cauchy_heine_coboundary.csv"), {"eps_re", "eps_im", "gap", "error_estimate"});
    for (std::size_t k = 0; k < cb.eps.size(); ++k) {
      w << cb.eps[k].real() << cb.eps[k].imag() << cb.gaps[k] << cb.error_estimates[k];
      w.end_row();
    }
  }
  c.check_lt("coboundary_gap", cb.max_gap, p.num("gap_tol", 1e-6));

  const int m_max = p.integer_or("m_max", 12);
  double worst = 0.0;
  {
    CsvWriter w(c.file("cauchy_heine_alpha.csv"), {"l", "m", "alpha_re", "alpha_im", "envelope", "ratio"});
    for (int l = 0; l < data.nu; ++l) {
      if (data.zero(l)) continue;
      for (const auto& a : taylor_coefficients(data, l, m_max)) {
        w << l << a.m << a.alpha.real() << a.alpha.imag() << a.envelope << a.ratio;
        w.end_row();
        worst = std::max(worst, a.ratio);
      }
    }
  }
  c.check_le("alpha_envelope", worst, p.num("ratio_tol", 1.05));

  const auto radii = p.nums("eps_radii", {0.1, 0.15, 0.2, 0.25});
  const double hw = p.angle("eps_half_width", 0.3);
  std::vector<std::vector<cplx>> grids(data.nu);
  for (int l = 0; l < data.nu; ++l) {
    const double lo = data.theta[(l + data.nu - 1) % data.nu];
    const double mid = lo + 0.5 * canonical_angle(data.theta[l] - lo);
    for (double r : radii)
      for (double d : {-hw, 0.0, hw}) grids[l].push_back(std::polar(r * data.r, mid + d));
  }
  const int rm = std::min(m_max, 12);
  const auto rec = reconstruct_expansion(data, rm, grids, p.num("L_hat_factor", 1.1));
  {
    CsvWriter w(c.file("cauchy_heine_reconstruct.csv"),
                {"sector", "m", "phi_re", "phi_im", "remainder", "L_measured"});
    for (const auto& s : rec.sectors) {
      for (std::size_t M = 0; M < s.remainder.size(); ++M) {
        const cplx ph = M < s.phi.size() ? s.phi[M] : cplx{};
        w << s.sector << int(M) << ph.real() << ph.imag() << s.remainder[M] << s.L_measured;
        w.end_row();
      }
    }
  }
  const double shared_tol = p.num("shared_tol", 1e-6);
  c.check_le("expansion_shared", rec.max_coefficient_gap, shared_tol);
  double Lm = 0.0;
  for (const auto& s : rec.sectors) Lm = std::max(Lm, s.L_measured);
  c.check("expansion_type", Lm, rec.L_hat, "<=", rec.feasible);
  const auto neg = reconstruct_expansion(data, rm, grids, p.num("negative_factor", 0.5));
  c.check("expansion_negative_control", Lm, neg.L_hat, ">", !neg.feasible);
}

using Runner = void (*)(Context&, const Params&);

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> r = {
      {"assumptions", run_assumptions}, {"borel", run_borel},
      {"norms", run_norms},             {"solve", run_solve},
      {"residual", run_residual},       {"cocycle", run_cocycle},
      {"dirichlet", run_dirichlet},     {"asymptotics", run_asymptotics},
      {"cauchy-heine", run_cauchy_heine},
  };
  return r;
}

std::string json_number(double x) {
  if (std::isnan(x)) return "null";
  if (std::isinf(x)) return x > 0 ? "\"inf\"" : "\"-inf\"";
  return fmt17(x);
}

void write_summary(const Scenario& sc, const RunOptions& opt, const RunResult& res) {
  json j;
  j["scenario"] = sc.name;
  j["exit_code"] = res.exit_code;
  j["message"] = res.message;
  j["seed"] = opt.seed;
  j["files"] = res.files;
  j["checks"] = json::array();
  for (const auto& c : res.checks) {
    j["checks"].push_back({{"block", c.block},
                           {"name", c.name},
                           {"measured", json::parse(json_number(c.measured))},
                           {"tolerance", json::parse(json_number(c.tolerance))},
                           {"relation", c.relation},
                           {"pass", c.pass}});
  }
  std::ofstream(opt.out_dir / "summary.json") << j.dump(2) << "\n";

  std::ofstream t(opt.out_dir / "summary.txt");
  char line[256];
  std::snprintf(line, sizeof line, "%-14s %-28s %-24s %-3s %-24s %s\n", "block", "check",
                "measured", "rel", "tolerance", "result");
  t << "scenario " << sc.name << "\n" << line;
  for (const auto& c : res.checks) {
    std::snprintf(line, sizeof line, "%-14s %-28s %-24s %-3s %-24s %s\n", c.block.c_str(),
                  c.name.c_str(), fmt17(c.measured).c_str(), c.relation.c_str(),
                  fmt17(c.tolerance).c_str(), c.pass ? "PASS" : "FAIL");
    t << line;
  }
  t << res.checks.size() << " checks, exit " << res.exit_code;
  if (!res.message.empty()) t << ": " << res.message;
  t << "\n";
}

}  // namespace

const std::vector<std::string>& block_order() {
  static const std::vector<std::string> order = {"assumptions", "borel",    "norms",
                                                 "solve",       "residual", "cocycle",
                                                 "dirichlet",   "asymptotics", "cauchy-heine"};
  return order;
}

Scenario parse_scenario(const json& j) {
  only_keys(j, "", {"name", "angle_unit", "problem", "norms", "schedule", "geometry", "run_plan"});
  Scenario sc;
  const json& name = require(j, "", "name");
  if (!name.is_string()) fail("/name", "expected a string");
  sc.name = name.get<std::string>();
  if (!valid_path_component(sc.name)) fail("/name", "not a valid path component");
  if (j.contains("angle_unit")) {
    const json& u = j["angle_unit"];
    if (u == "deg") {
      sc.angle_scale = std::numbers::pi / 180.0;
    } else if (u != "rad") {
      fail("/angle_unit", "expected \"rad\" or \"deg\"");
    }
  }
  sc.problem = parse_problem(require(j, "", "problem"), "/problem");
  sc.norms = parse_norms(require(j, "", "norms"), "/norms", sc.problem);
  if (j.contains("schedule")) sc.schedule = parse_schedule(j["schedule"], "/schedule", sc.problem);
  sc.geometry = parse_geometry(require(j, "", "geometry"), "/geometry", sc.angle_scale);

  const json& plan = require(j, "", "run_plan");
  if (!plan.is_array()) fail("/run_plan", "expected an array");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const std::string w = at("/run_plan", i);
    Block b;
    if (plan[i].is_string()) {
      b.name = plan[i].get<std::string>();
      b.params = json::object();
    } else {
      const json& nm = require(plan[i], w, "block");
      if (!nm.is_string()) fail(at(w, "block"), "expected a string");
      b.name = nm.get<std::string>();
      b.params = plan[i];
    }
    if (!block_keys().count(b.name)) fail(w, "unknown block '" + b.name + "'");
    if (!seen.insert(b.name).second) fail(w, "block '" + b.name + "' listed twice");
    check_block_params(b, w);
    sc.run_plan.push_back(std::move(b));
  }
  return sc;
}

Scenario load_scenario(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError(path.string() + ": cannot open");
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return parse_scenario(j);
}

RunResult run_scenario(const Scenario& sc, const RunOptions& opt) {
  RunResult res;
  fs::create_directories(opt.out_dir);
  for (const auto& name : opt.only) {
    if (!block_keys().count(name)) {
      res.exit_code = 2;
      res.message = "--only: unknown block '" + name + "'";
      write_summary(sc, opt, res);
      return res;
    }
  }
  auto spec = std::make_shared<const ProblemSpec>(sc.problem);
  auto table = std::make_shared<CoefficientTable>(spec);
  const auto& order = block_order();

  try {
    for (std::size_t bi = 0; bi < order.size(); ++bi) {
      std::size_t pos = 0;
      while (pos < sc.run_plan.size() && sc.run_plan[pos].name != order[bi]) ++pos;
      if (pos == sc.run_plan.size()) continue;
      const Block* it = &sc.run_plan[pos];
      if (!opt.only.empty() && !opt.only.count(it->name)) continue;
      // Each block draws from its own stream so filtered runs reproduce the full run.
      Context ctx{sc, opt, res, it->name, table, std::mt19937_64(opt.seed + 1000003ULL * bi)};
      Params params(it->params, at("/run_plan", pos), sc.angle_scale);
      try {
        runners().at(it->name)(ctx, params);
      } catch (const ValidationError&) {
        throw;
      } catch (const HypothesisError&) {
        throw;
      } catch (const Error& e) {
        ctx.check(std::string("error: ") + e.what(), 0, 0, "", false);
      }
    }
  } catch (const HypothesisError& e) {
    res.exit_code = 2;
    res.message = std::string("hypothesis error: ") + e.what();
    write_summary(sc, opt, res);
    return res;
  } catch (const ValidationError& e) {
    res.exit_code = 2;
    res.message = std::string("schema error: ") + e.what();
    write_summary(sc, opt, res);
    return res;
  }

  std::vector<std::string> failed;
  for (const auto& c : res.checks)
    if (!c.pass) failed.push_back(c.block + "/" + c.name);
  if (!failed.empty()) {
    res.exit_code = 1;
    res.message = "check failed: " + failed.front();
    for (std::size_t k = 1; k < failed.size(); ++k) res.message += ", " + failed[k];
  }
  write_summary(sc, opt, res);
  return res;
}

}  // namespace qgevrey
