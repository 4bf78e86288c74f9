#pragma once

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "vortexlab/conformal.hpp"
#include "vortexlab/core.hpp"

namespace vortexlab {

// G(x,y) = (1/2pi) ln|x-y| + gamma(x,y), evaluated through the conformal map:
// in disk coordinates G_D(u,v) = (1/2pi) ln( |u-v| / |1 - u conj(v)| ).
struct GreenEvaluation {
  double value = 0.0;
  cplx grad_x{0.0, 0.0};
  double log_term = 0.0;
  double gamma_term = 0.0;
};

struct RobinEvaluation {
  double value = 0.0;
  cplx grad{0.0, 0.0};
  bool has_hessian = false;
  double hess[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
};

namespace detail {

inline void require_inside(const DomainModel& dom, const TDerivs& td) {
  if (std::abs(td.T) >= 1.0) throw domain_error("point outside domain");
  (void)dom;
}

// nabla gamma_D at the diagonal of the Robin function of the disk:
// grad of gammatilde_D(w) = -(1/2pi) ln(1-|w|^2) is w / (pi (1-|w|^2)).
inline cplx grad_robin_disk(cplx w) { return w / (kPi * (1.0 - norm2(w))); }

// The three-term complex gradient of gamma, given T-derivatives at x and T(y).
// Near the diagonal the singular pair is replaced by its series expansion.
inline cplx grad_gamma_from(const TDerivs& tx, cplx Ty, cplx x, cplx y) {
  const cplx conj_Ty = std::conj(Ty);
  // T1/(Tx - Ty*) rewritten as T1 conj(Ty) / (Tx conj(Ty) - 1): smooth at Ty=0
  const cplx boundary_term = tx.T1 * conj_Ty / (tx.T * conj_Ty - 1.0);
  const cplx dx = x - y;
  cplx inner;
  if (std::abs(dx) < 1e-6) {
    // T1/(Tx-Ty) - 1/(x-y) = u + (u^2 - v)(x-y) + O(|x-y|^2),
    // u = T2/(2 T1), v = T3/(6 T1)
    const cplx u = tx.T2 / (2.0 * tx.T1);
    const cplx v = tx.T3 / (6.0 * tx.T1);
    inner = u + (u * u - v) * dx;
  } else {
    inner = tx.T1 / (tx.T - Ty) - 1.0 / dx;
  }
  return std::conj(inner - boundary_term) / kTwoPi;
}

}  // namespace detail

inline cplx grad_gamma_x(const DomainModel& dom, cplx x, cplx y) {
  const TDerivs tx = t_derivs(dom, x);
  detail::require_inside(dom, tx);
  const TDerivs ty = t_derivs(dom, y);
  detail::require_inside(dom, ty);
  return detail::grad_gamma_from(tx, ty.T, x, y);
}

inline GreenEvaluation green(const DomainModel& dom, cplx x, cplx y) {
  if (std::abs(x - y) < 1e-14) throw singularity_error("Green's function singular at x = y");
  const TDerivs tx = t_derivs(dom, x);
  detail::require_inside(dom, tx);
  const TDerivs ty = t_derivs(dom, y);
  detail::require_inside(dom, ty);
  GreenEvaluation g;
  g.log_term = std::log(std::abs(x - y)) / kTwoPi;
  // |Tx - Ty*| |Ty| = |1 - Tx conj(Ty)|, smooth through Ty = 0
  g.gamma_term = (std::log(std::abs(tx.T - ty.T)) - std::log(std::abs(1.0 - tx.T * std::conj(ty.T))) -
                  std::log(std::abs(x - y))) /
                 kTwoPi;
  g.value = g.log_term + g.gamma_term;
  g.grad_x = (x - y) / (kTwoPi * norm2(x - y)) + detail::grad_gamma_from(tx, ty.T, x, y);
  return g;
}

// gammatilde(x) = gammatilde_D(T(x)) + (1/2pi) ln|T'(x)|
inline double robin(const DomainModel& dom, cplx x) {
  const TDerivs td = t_derivs(dom, x);
  detail::require_inside(dom, td);
  return -std::log(1.0 - norm2(td.T)) / kTwoPi + std::log(std::abs(td.T1)) / kTwoPi;
}

inline cplx grad_robin(const DomainModel& dom, cplx x) {
  const TDerivs td = t_derivs(dom, x);
  detail::require_inside(dom, td);
  return std::conj(td.T1) * detail::grad_robin_disk(td.T) +
         td.T1 * std::conj(td.T2) / (kTwoPi * norm2(td.T1));
}

// Hessian of the Robin function at the stationary point x0, with the symbols
// mu^2 = |T'(x0)|^2, p = T''' . T' / mu^2, q = (T''')^perp . T' / mu^2, and
// D^2 gammatilde(x0) = (1/2pi) [[2mu^2+p, q], [q, 2mu^2-p]].
struct RobinHessian {
  double mu2 = 0.0, p = 0.0, q = 0.0;
  double matrix[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  double lambda_plus = 0.0, lambda_minus = 0.0;
};

inline RobinHessian hessian_robin_at_stationary(const DomainModel& dom) {
  if (std::abs(dom.t2) > 1e-8 * std::abs(dom.t1))
    throw precondition_error("Hessian formula requires a stationary point (T''(x0) = 0)");
  RobinHessian h;
  h.mu2 = norm2(dom.t1);
  h.p = dot(dom.t3, dom.t1) / h.mu2;
  h.q = dot(perp(dom.t3), dom.t1) / h.mu2;
  h.matrix[0][0] = (2.0 * h.mu2 + h.p) / kTwoPi;
  h.matrix[0][1] = h.matrix[1][0] = h.q / kTwoPi;
  h.matrix[1][1] = (2.0 * h.mu2 - h.p) / kTwoPi;
  const double root = std::sqrt(h.p * h.p + h.q * h.q);
  h.lambda_plus = (2.0 * h.mu2 + root) / (4.0 * kPi);
  h.lambda_minus = (2.0 * h.mu2 - root) / (4.0 * kPi);
  return h;
}

// Biot-Savart velocity induced at x by point sources (z_j, a_j):
//   sum_j a_j (x-z_j)^perp / (2pi |x-z_j|^2)   (log kernel, j != exclude)
// + sum_j a_j grad_x^perp gamma(x, z_j)        (all j; smooth limit at z_j = x).
// Summation order is source-index ascending for bit reproducibility.
inline cplx velocity(const DomainModel& dom, std::span<const cplx> positions,
                     std::span<const double> masses, cplx x, long exclude = -1,
                     double mollify = 0.0) {
  const TDerivs tx = t_derivs(dom, x);
  detail::require_inside(dom, tx);
  cplx u{0.0, 0.0};
  for (std::size_t j = 0; j < positions.size(); ++j) {
    const cplx d = x - positions[j];
    const double dist = std::abs(d);
    const bool coincident = dist < 1e-14;
    if (long(j) != exclude) {
      if (coincident) throw singularity_error("velocity evaluated at a non-excluded source point");
      const double r = mollify > 0.0 ? std::max(dist, mollify) : dist;
      u += masses[j] * perp(d) / (kTwoPi * r * r);
    }
    if (coincident) {
      // smooth limit: the gamma term at its own location is half the Robin gradient
      const cplx gr = std::conj(tx.T1) * detail::grad_robin_disk(tx.T) +
                      tx.T1 * std::conj(tx.T2) / (kTwoPi * norm2(tx.T1));
      u += masses[j] * 0.5 * perp(gr);
    } else {
      const TDerivs tz = t_derivs(dom, positions[j]);
      u += masses[j] * perp(detail::grad_gamma_from(tx, tz.T, x, positions[j]));
    }
  }
  return u;
}

// Same reduction with the source disk images precomputed (one inversion per
// source per stage instead of per target): used by the integrators.
inline cplx velocity_cached(const DomainModel& dom, std::span<const cplx> positions,
                            std::span<const cplx> t_of_sources, std::span<const double> masses,
                            const TDerivs& tx, cplx x, long exclude, double mollify = 0.0) {
  cplx u{0.0, 0.0};
  for (std::size_t j = 0; j < positions.size(); ++j) {
    const cplx d = x - positions[j];
    const double dist = std::abs(d);
    const bool coincident = dist < 1e-14;
    if (long(j) != exclude) {
      if (coincident) throw singularity_error("velocity evaluated at a non-excluded source point");
      const double r = mollify > 0.0 ? std::max(dist, mollify) : dist;
      u += masses[j] * perp(d) / (kTwoPi * r * r);
    }
    if (coincident) {
      const cplx gr = std::conj(tx.T1) * detail::grad_robin_disk(tx.T) +
                      tx.T1 * std::conj(tx.T2) / (kTwoPi * norm2(tx.T1));
      u += masses[j] * 0.5 * perp(gr);
    } else {
      u += masses[j] * perp(detail::grad_gamma_from(tx, t_of_sources[j], x, positions[j]));
    }
  }
  return u;
}

// Empirical check of the near-diagonal difference quotient of grad gamma:
// r(x,y,z) = [conj(grad gamma(x,y)) - conj(grad gamma(z,y))] / (x-z) should
// approach T'''(x0)/(6 pi T'(x0)) as the sampling ball shrinks.
struct LemdevResult {
  double sup_ratio = 0.0;   // sup |r - T'''(x0)/(6 pi T'(x0))|
  cplx limit_coeff{0.0, 0.0};  // mean r
  double delta_max = 0.0;
};

inline LemdevResult lemdev_ratio(const DomainModel& dom, double delta, int samples,
                                 std::uint64_t rng_seed) {
  const double dmax = boundary_distance(dom);
  if (!(delta > 0.0) || delta > dmax)
    throw precondition_error("sampling radius must satisfy 0 < delta <= distance to boundary");
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  auto draw = [&]() {
    for (;;) {
      const cplx p{unif(rng), unif(rng)};
      if (norm2(p) <= 1.0) return dom.x0 + delta * p;
    }
  };
  const cplx target = dom.t3 / (6.0 * kPi * dom.t1);
  LemdevResult out;
  out.delta_max = dmax;
  cplx mean{0.0, 0.0};
  for (int s = 0; s < samples; ++s) {
    cplx x = draw(), y = draw(), z = draw();
    while (std::abs(x - z) < 1e-3 * delta) z = draw();
    const cplx r =
        (std::conj(grad_gamma_x(dom, x, y)) - std::conj(grad_gamma_x(dom, z, y))) / (x - z);
    out.sup_ratio = std::max(out.sup_ratio, std::abs(r - target));
    mean += r;
  }
  out.limit_coeff = mean / double(samples);
  return out;
}

}  // namespace vortexlab
