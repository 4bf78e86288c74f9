#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace vortexlab {

using cplx = std::complex<double>;

// (v1,v2)^perp = (-v2,v1), i.e. multiplication by i.
inline cplx perp(cplx v) { return {-v.imag(), v.real()}; }

// Real 2-vector dot product of complex numbers viewed as points in R^2.
inline double dot(cplx a, cplx b) { return a.real() * b.real() + a.imag() * b.imag(); }

inline double norm2(cplx v) { return v.real() * v.real() + v.imag() * v.imag(); }

inline bool is_finite(cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

struct argument_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct domain_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct singularity_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct inversion_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct precondition_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A physical event (vortex collapse, boundary collision, support reaching the
// boundary) that ends a run but is not a bug. Carries the event time.
struct physics_event : std::runtime_error {
  double time;
  physics_event(const std::string& what, double t) : std::runtime_error(what), time(t) {}
};

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

}  // namespace vortexlab
