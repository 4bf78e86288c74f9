#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <mutex>
#include <random>
#include <span>
#include <thread>
#include <vector>

#include "vortexlab/core.hpp"
#include "vortexlab/greens.hpp"

namespace vortexlab {

struct VortexSystem {
  std::vector<cplx> positions;
  std::vector<double> masses;
  double time = 0.0;
};

enum class BlobProfile { UniformDisk, GaussianTruncated };

struct BlobState {
  std::vector<cplx> positions;
  std::vector<double> weights;  // fixed after init, all one sign
  double epsilon = 0.0;
  double beta = 0.0;
  cplx x0{0.0, 0.0};
  double time = 0.0;
  double total_mass = 0.0;
};

struct DiagnosticsRecord {
  double t = 0.0;
  cplx B{0.0, 0.0};
  double I = 0.0;
  double R = 0.0;
  double H = 0.0;
  double m4 = 0.0;
  double m8 = 0.0;
  std::vector<std::pair<double, double>> tail_mass;  // (r, mass beyond r)
};

struct ExitTimeResult {
  double epsilon = 0.0;
  double beta = 0.0;
  double tau = 0.0;
  bool horizon_reached = false;
  double horizon = 0.0;
  long steps = 0;
  double dt = 0.0;
  std::string domain_label;
};

inline constexpr double kCollisionThreshold = 1e-8;

namespace detail {

// Run fn(i) for i in [0,n) on up to nthreads workers. Each index is
// independent, so the result does not depend on the thread count.
template <class Fn>
void parallel_for(std::size_t n, int nthreads, Fn&& fn) {
  if (nthreads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = std::min<int>(nthreads, int(n));
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mu;
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = std::size_t(t); i < n; i += std::size_t(workers)) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

// One velocity evaluation for every particle: inverts each position once
// (seeded by wseeds), checks the boundary margin, then does the O(N^2) sum.
inline void stage_velocities(const DomainModel& dom, std::span<const cplx> positions,
                             std::span<const double> masses, double t, std::vector<cplx>& wseeds,
                             std::vector<cplx>& out, int threads, double mollify) {
  const std::size_t n = positions.size();
  std::vector<TDerivs> td(n);
  parallel_for(n, threads, [&](std::size_t i) {
    td[i] = t_derivs(dom, positions[i], wseeds.empty() ? std::nullopt : std::optional<cplx>(wseeds[i]));
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(td[i].T) >= 1.0 - dom.boundary_margin)
      throw physics_event("boundary collision at t=" + std::to_string(t), t);
  }
  if (wseeds.size() == n)
    for (std::size_t i = 0; i < n; ++i) wseeds[i] = td[i].w;
  std::vector<cplx> Ts(n);
  for (std::size_t i = 0; i < n; ++i) Ts[i] = td[i].T;
  out.resize(n);
  parallel_for(n, threads, [&](std::size_t i) {
    out[i] = velocity_cached(dom, positions, Ts, masses, td[i], positions[i], long(i), mollify);
  });
}

inline void check_collisions(std::span<const cplx> positions, double t) {
  for (std::size_t i = 0; i < positions.size(); ++i)
    for (std::size_t j = i + 1; j < positions.size(); ++j)
      if (std::abs(positions[i] - positions[j]) < kCollisionThreshold)
        throw physics_event("vortex collapse at t=" + std::to_string(t), t);
}

// Classical 4-stage Runge-Kutta step of the Kirchhoff-Routh right-hand side,
// shared by the point-vortex system and the particle blob.
inline void rk4_step(const DomainModel& dom, std::vector<cplx>& positions,
                     std::span<const double> masses, double t, double dt,
                     std::vector<cplx>& wseeds, int threads, double mollify) {
  const std::size_t n = positions.size();
  std::vector<cplx> k1, k2, k3, k4, tmp(n);
  stage_velocities(dom, positions, masses, t, wseeds, k1, threads, mollify);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = positions[i] + 0.5 * dt * k1[i];
  stage_velocities(dom, tmp, masses, t + 0.5 * dt, wseeds, k2, threads, mollify);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = positions[i] + 0.5 * dt * k2[i];
  stage_velocities(dom, tmp, masses, t + 0.5 * dt, wseeds, k3, threads, mollify);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = positions[i] + dt * k3[i];
  stage_velocities(dom, tmp, masses, t + dt, wseeds, k4, threads, mollify);
  for (std::size_t i = 0; i < n; ++i)
    positions[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

inline std::vector<cplx> initial_wseeds(const DomainModel& dom, std::span<const cplx> positions) {
  std::vector<cplx> w(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i)
    w[i] = invert(dom.map, positions[i], std::nullopt, dom.inversion_tolerance);
  return w;
}

}  // namespace detail

inline VortexSystem step_point_vortices(const DomainModel& dom, const VortexSystem& sys, double dt,
                                        int threads = 1) {
  if (!(dt > 0.0)) throw argument_error("dt must be positive");
  detail::check_collisions(sys.positions, sys.time);
  VortexSystem next = sys;
  auto wseeds = detail::initial_wseeds(dom, next.positions);
  detail::rk4_step(dom, next.positions, next.masses, next.time, dt, wseeds, threads, 0.0);
  next.time += dt;
  detail::check_collisions(next.positions, next.time);
  return next;
}

inline BlobState step_blob(const DomainModel& dom, const BlobState& blob, double dt,
                           int threads = 1, double mollify = 0.0) {
  if (!(dt > 0.0)) throw argument_error("dt must be positive");
  BlobState next = blob;
  auto wseeds = detail::initial_wseeds(dom, next.positions);
  try {
    detail::rk4_step(dom, next.positions, next.weights, next.time, dt, wseeds, threads, mollify);
  } catch (const physics_event& e) {
    throw physics_event("support reached boundary at t=" + std::to_string(e.time), e.time);
  }
  next.time += dt;
  return next;
}

struct TrajectorySample {
  double t = 0.0;
  cplx z{0.0, 0.0};
  double robin_value = 0.0;
};

// Single vortex of unit mass: z' = (1/2) grad^perp gammatilde(z).
inline std::vector<TrajectorySample> simulate_single_vortex(const DomainModel& dom, cplx z0,
                                                            double dt, double horizon,
                                                            long record_every = 1) {
  std::vector<cplx> pos{z0};
  const double mass[1] = {1.0};
  auto wseeds = detail::initial_wseeds(dom, pos);
  std::vector<TrajectorySample> out;
  out.push_back({0.0, z0, robin(dom, z0)});
  const long nsteps = long(std::ceil(horizon / dt - 1e-9));
  for (long s = 0; s < nsteps; ++s) {
    detail::rk4_step(dom, pos, mass, double(s) * dt, dt, wseeds, 1, 0.0);
    if ((s + 1) % record_every == 0 || s + 1 == nsteps)
      out.push_back({double(s + 1) * dt, pos[0], robin(dom, pos[0])});
  }
  return out;
}

// Exit times of a single vortex released at x0 + eps * e_plus along the
// unstable eigendirection of the linearized dynamics.
struct UnstableExit {
  double epsilon = 0.0;
  double tau = 0.0;
  bool horizon_reached = false;
};

inline cplx unstable_direction(const RobinHessian& h) {
  // Jacobian of (1/2) grad^perp gammatilde at x0 is M = J * (1/2) D^2 gammatilde;
  // M is traceless with eigenvalues +-xi, xi = sqrt(-lambda_+ lambda_-)
  const double a = 0.5 * h.matrix[0][0], b = 0.5 * h.matrix[0][1];
  const double d = 0.5 * h.matrix[1][1];
  const double m11 = -b, m12 = -d, m21 = a, m22 = b;
  const double xi2 = m11 * m11 + m12 * m21;
  if (xi2 <= 0.0) throw precondition_error("stationary point is not unstable");
  const double xi = std::sqrt(xi2);
  // eigenvector of [[m11,m12],[m21,m22]] for +xi
  cplx v;
  if (std::abs(m12) > std::abs(m21))
    v = cplx{m12, xi - m11};
  else
    v = cplx{xi - m22, m21};
  const double nv = std::abs(v);
  if (nv < 1e-300) throw precondition_error("degenerate unstable direction");
  return v / nv;
}

inline double growth_rate(const RobinHessian& h) {
  const double prod = h.lambda_plus * h.lambda_minus;
  if (prod >= 0.0) throw precondition_error("stationary point is not unstable");
  return std::sqrt(-prod);
}

inline std::vector<UnstableExit> unstable_exit_experiment(const DomainModel& dom,
                                                          std::span<const double> epsilons,
                                                          double beta, double dt, double horizon) {
  const RobinHessian h = hessian_robin_at_stationary(dom);
  cplx eplus;
  if (h.lambda_plus * h.lambda_minus < 0.0) {
    eplus = unstable_direction(h);
  } else {
    // stable point: no unstable direction exists; displace along the
    // lambda_+ eigendirection of the Hessian (the experiment then just
    // confirms the vortex stays, reaching the horizon)
    const double A = h.matrix[0][0], B = h.matrix[0][1], C = h.matrix[1][1];
    cplx v = std::abs(B) > 1e-300 ? cplx{B, 2.0 * h.lambda_plus - A}
                                  : (A >= C ? cplx{1.0, 0.0} : cplx{0.0, 1.0});
    eplus = v / std::abs(v);
  }
  std::vector<UnstableExit> out;
  for (double eps : epsilons) {
    const double exit_radius = std::pow(eps, beta);
    std::vector<cplx> pos{dom.x0 + eps * eplus};
    const double mass[1] = {1.0};
    auto wseeds = detail::initial_wseeds(dom, pos);
    UnstableExit r;
    r.epsilon = eps;
    r.horizon_reached = true;
    r.tau = horizon;
    const long nsteps = long(std::ceil(horizon / dt - 1e-9));
    for (long s = 0; s < nsteps; ++s) {
      detail::rk4_step(dom, pos, mass, double(s) * dt, dt, wseeds, 1, 0.0);
      if (std::abs(pos[0] - dom.x0) >= exit_radius) {
        r.tau = double(s + 1) * dt;
        r.horizon_reached = false;
        break;
      }
    }
    out.push_back(r);
  }
  return out;
}

inline BlobState init_blob(const DomainModel& dom, cplx x0, double epsilon, double beta,
                           int n_particles, double total_mass, BlobProfile profile,
                           std::uint64_t rng_seed) {
  if (n_particles < 1) throw argument_error("need at least one particle");
  if (!(epsilon > 0.0)) throw argument_error("epsilon must be positive");
  if (!(beta > 0.0 && beta < 0.5)) throw argument_error("beta must lie in (0, 1/2)");
  if (std::abs(x0 - dom.x0) + epsilon >= boundary_distance(dom))
    throw precondition_error("blob disk not contained in the domain");
  BlobState blob;
  blob.epsilon = epsilon;
  blob.beta = beta;
  blob.x0 = x0;
  if (profile == BlobProfile::UniformDisk) {
    // hexagonal lattice intersected with the disk, spacing tuned so at least
    // n_particles lattice points fall inside; keep the n closest to the center
    double h = epsilon * std::sqrt(kTwoPi / (std::sqrt(3.0) * double(n_particles)));
    std::vector<cplx> pts;
    for (int tries = 0; tries < 200; ++tries) {
      pts.clear();
      const int mmax = int(std::ceil(epsilon / h)) + 2;
      for (int a = -2 * mmax; a <= 2 * mmax; ++a) {
        for (int b = -2 * mmax; b <= 2 * mmax; ++b) {
          const cplx p{h * (double(a) + 0.5 * double(b)), h * 0.5 * std::sqrt(3.0) * double(b)};
          if (std::abs(p) <= epsilon * (1.0 + 1e-12)) pts.push_back(p);
        }
      }
      if (int(pts.size()) >= n_particles) break;
      h *= 0.97;
    }
    std::sort(pts.begin(), pts.end(), [](cplx a, cplx b) {
      const double ra = std::abs(a), rb = std::abs(b);
      if (ra != rb) return ra < rb;
      return std::arg(a) < std::arg(b);
    });
    pts.resize(std::size_t(n_particles));
    for (cplx p : pts) blob.positions.push_back(x0 + p);
  } else {
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> gauss(0.0, epsilon / 3.0);
    while (int(blob.positions.size()) < n_particles) {
      const cplx p{gauss(rng), gauss(rng)};
      if (std::abs(p) <= epsilon) blob.positions.push_back(x0 + p);
    }
  }
  const double w = total_mass / double(n_particles);
  blob.weights.assign(std::size_t(n_particles), w);
  double sum = 0.0;
  for (double wi : blob.weights) sum += wi;
  blob.total_mass = sum;
  return blob;
}

inline DiagnosticsRecord diagnostics(const DomainModel& dom, const BlobState& blob,
                                     std::span<const double> tail_radii = {}) {
  if (blob.positions.empty()) throw argument_error("empty blob");
  DiagnosticsRecord rec;
  rec.t = blob.time;
  double wsum = 0.0;
  cplx first{0.0, 0.0};
  for (std::size_t i = 0; i < blob.positions.size(); ++i) {
    wsum += blob.weights[i];
    first += blob.weights[i] * blob.positions[i];
  }
  rec.B = first / wsum;
  for (std::size_t i = 0; i < blob.positions.size(); ++i) {
    const double r2 = norm2(blob.positions[i] - rec.B);
    rec.I += blob.weights[i] * r2;
    rec.m4 += blob.weights[i] * r2 * r2;
    rec.m8 += blob.weights[i] * r2 * r2 * r2 * r2;
    rec.R = std::max(rec.R, std::sqrt(r2));
  }
  // Hamiltonian: pair Green terms plus self Robin terms, via cached disk images
  const std::size_t n = blob.positions.size();
  std::vector<TDerivs> td(n);
  for (std::size_t i = 0; i < n; ++i) td[i] = t_derivs(dom, blob.positions[i]);
  for (std::size_t i = 0; i < n; ++i) {
    const double robin_i = -std::log(1.0 - norm2(td[i].T)) / kTwoPi +
                           std::log(std::abs(td[i].T1)) / kTwoPi;
    rec.H += 0.5 * blob.weights[i] * blob.weights[i] * robin_i;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double g = (std::log(std::abs(td[i].T - td[j].T)) -
                        std::log(std::abs(1.0 - td[i].T * std::conj(td[j].T)))) /
                       kTwoPi;
      rec.H += blob.weights[i] * blob.weights[j] * g;
    }
  }
  for (double r : tail_radii) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (std::abs(blob.positions[i] - rec.B) > r) m += std::abs(blob.weights[i]);
    rec.tail_mass.emplace_back(r, m);
  }
  return rec;
}

// Hamiltonian of a point-vortex configuration (first integral of the flow).
inline double hamiltonian(const DomainModel& dom, std::span<const cplx> positions,
                          std::span<const double> masses) {
  const std::size_t n = positions.size();
  std::vector<TDerivs> td(n);
  for (std::size_t i = 0; i < n; ++i) td[i] = t_derivs(dom, positions[i]);
  double H = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double robin_i =
        -std::log(1.0 - norm2(td[i].T)) / kTwoPi + std::log(std::abs(td[i].T1)) / kTwoPi;
    H += 0.5 * masses[i] * masses[i] * robin_i;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double g = (std::log(std::abs(td[i].T - td[j].T)) -
                        std::log(std::abs(1.0 - td[i].T * std::conj(td[j].T)))) /
                       kTwoPi;
      H += masses[i] * masses[j] * g;
    }
  }
  return H;
}

// Integrate the blob and report the first time its support leaves
// D(x0, eps^beta). Exit detection is post-step, so tau has resolution dt.
inline ExitTimeResult measure_exit_time(
    const DomainModel& dom, const BlobState& blob0, double dt, double horizon, int threads = 1,
    const std::function<void(const BlobState&)>& observer = {}, long observe_every = 1) {
  ExitTimeResult res;
  res.epsilon = blob0.epsilon;
  res.beta = blob0.beta;
  res.horizon = horizon;
  res.dt = dt;
  res.domain_label = dom.map.label;
  const double exit_radius = std::pow(blob0.epsilon, blob0.beta);
  BlobState blob = blob0;
  auto wseeds = detail::initial_wseeds(dom, blob.positions);
  if (observer) observer(blob);
  const long nsteps = long(std::ceil(horizon / dt - 1e-9));
  for (long s = 0; s < nsteps; ++s) {
    try {
      detail::rk4_step(dom, blob.positions, blob.weights, blob.time, dt, wseeds, threads, 0.0);
    } catch (const physics_event& e) {
      throw physics_event("support reached boundary at t=" + std::to_string(e.time), e.time);
    }
    blob.time = blob0.time + double(s + 1) * dt;
    res.steps = s + 1;
    if (observer && ((s + 1) % observe_every == 0 || s + 1 == nsteps)) observer(blob);
    double rmax = 0.0;
    for (const cplx& p : blob.positions) rmax = std::max(rmax, std::abs(p - blob.x0));
    if (rmax >= exit_radius) {
      res.tau = blob.time - blob0.time;
      res.horizon_reached = false;
      return res;
    }
  }
  res.tau = horizon;
  res.horizon_reached = true;
  return res;
}

}  // namespace vortexlab
