#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

// Small deterministic generator for property tests (splitmix64).
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : s_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (s_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double unit() { return double(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  int integer(int lo, int hi) { return lo + int(next() % std::uint64_t(hi - lo + 1)); }
  double angle() { return uniform(-std::numbers::pi, std::numbers::pi); }
  std::complex<double> polar(double r_lo, double r_hi) {
    return std::polar(log_uniform(r_lo, r_hi), angle());
  }
  std::complex<double> polar_in(double r_lo, double r_hi, double a_lo, double a_hi) {
    return std::polar(log_uniform(r_lo, r_hi), uniform(a_lo, a_hi));
  }

 private:
  std::uint64_t s_;
};
