#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace qgevrey {

using cplx = std::complex<double>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data (schema, invariants of a type).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A hypothesis of a statement being checked is not met (e.g. Delta <= 1).
class HypothesisError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ResourceError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

class OrderError : public Error {
 public:
  using Error::Error;
};

// Integrand near 0 did not decay (the cocycle is not flat).
class FlatnessError : public Error {
 public:
  using Error::Error;
};

// Sector-wise expansion coefficients disagree beyond their error bars.
class CocycleInconsistency : public Error {
 public:
  using Error::Error;
};

class SingularityError : public Error {
 public:
  SingularityError(const std::string& what, cplx pole) : Error(what), pole_(pole) {}
  cplx pole() const { return pole_; }

 private:
  cplx pole_;
};

}  // namespace qgevrey
