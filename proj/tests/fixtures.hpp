#pragma once

#include <memory>
#include <numbers>

#include "qgevrey/problem_model.hpp"

namespace fixtures {

inline double deg(double d) { return d * std::numbers::pi / 180.0; }

// S = 2, a = -1, q = 1/2, one term (kappa0, kappa1) = (0, 1) with m1 = m2 = 1, b_0 = 1;
// W_0 = 1, W_1 = 1 / (a - tau).
inline qgevrey::ProblemSpec example_spec() {
  qgevrey::ProblemSpec p;
  p.S = 2;
  p.a = {-1.0, 0.0};
  p.q = 0.5;
  p.r0 = 1.0;
  qgevrey::KappaEntry k;
  k.k0 = 0;
  k.k1 = 1;
  k.m1 = 1;
  k.m2 = 1;
  k.b[0] = qgevrey::EpsPoly::constant(1.0);
  p.kappa.push_back(k);
  qgevrey::InitTerm one;
  qgevrey::InitTerm pole;
  pole.pole_order = 1;
  p.initial_data = {{one}, {pole}};
  return p;
}

inline qgevrey::NormParams example_norms() {
  qgevrey::NormParams n;
  n.M = 0.1;
  n.A1 = 0.25;
  n.C = 0.2;
  n.delta1 = 1.0;
  n.M_tilde = 0.05;
  n.K0 = 0;
  n.Delta_ic = 1.0;
  n.delta_series = 0.5;
  return n;
}

inline qgevrey::RadiusSchedule example_schedule() {
  return qgevrey::RadiusSchedule(0.5, 1.0, 0.9, 1.0, 0.9, 2, 0.5);
}

inline qgevrey::SectorGeometry example_geometry() {
  qgevrey::SectorGeometry g;
  for (double d : {165.0, 195.0, 255.0, 315.0, 15.0, 75.0, 135.0}) {
    g.covering.push_back({deg(d), deg(70), 0.5});
    g.assoc.push_back({deg(d), deg(85)});
    g.gammas.push_back(deg(d));
  }
  g.T = {deg(-3), deg(3), 1.0, 2.0};
  g.delta2 = 0.5;
  g.delta3 = 0.1;
  return g;
}

}  // namespace fixtures
