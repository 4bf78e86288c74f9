#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "vortexlab/conformal.hpp"
#include "vortexlab/core.hpp"
#include "vortexlab/greens.hpp"

namespace vortexlab {

enum class StationaryClass { Valid, Stable, Unstable, Degenerate };

inline const char* to_string(StationaryClass c) {
  switch (c) {
    case StationaryClass::Valid: return "valid";
    case StationaryClass::Stable: return "stable";
    case StationaryClass::Unstable: return "unstable";
    case StationaryClass::Degenerate: return "degenerate";
  }
  return "?";
}

struct StationaryReport {
  cplx location{0.0, 0.0};
  cplx disk_preimage{0.0, 0.0};
  double mu2 = 0.0;
  double p = 0.0;
  double q = 0.0;
  double lambda_plus = 0.0;
  double lambda_minus = 0.0;
  StationaryClass cls = StationaryClass::Stable;
  double residual = 0.0;  // |grad gammatilde| at the point
};

enum class LawKind { Power, Log };

struct LawFit {
  LawKind kind = LawKind::Power;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<std::pair<double, double>> points;
};

namespace detail {

// gradient of h(w) = gammatilde_D(w) - (1/2pi) ln|f'(w)| in disk coordinates;
// zeros of grad h correspond to stationary points x0 = f(w)
inline cplx grad_disk_objective(const ConformalMap& map, cplx w) {
  const cplx f1 = derivative(map, w, 1);
  const cplx f2 = derivative(map, w, 2);
  return w / (kPi * (1.0 - norm2(w))) - std::conj(f2 / f1) / kTwoPi;
}

inline std::optional<cplx> stationary_newton(const ConformalMap& map, cplx w0) {
  cplx w = w0;
  for (int it = 0; it < 80; ++it) {
    const cplx r = grad_disk_objective(map, w);
    if (std::abs(r) < 1e-13) return w;
    const double h = 1e-7;
    const cplx rx = (grad_disk_objective(map, w + h) - grad_disk_objective(map, w - h)) / (2.0 * h);
    const cplx ry = (grad_disk_objective(map, w + cplx{0.0, h}) -
                     grad_disk_objective(map, w - cplx{0.0, h})) /
                    (2.0 * h);
    // solve the real 2x2 system J d = r
    const double a = rx.real(), b = ry.real(), c = rx.imag(), d = ry.imag();
    const double det = a * d - b * c;
    if (std::abs(det) < 1e-300) return std::nullopt;
    cplx step{(r.real() * d - b * r.imag()) / det, (a * r.imag() - r.real() * c) / det};
    if (std::abs(step) > 0.25) step *= 0.25 / std::abs(step);
    w -= step;
    if (std::abs(w) > 0.995) return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace detail

// Classification at a known stationary location, from the normalized
// derivatives there: valid if T''' = 0 up to tolerance, stable/unstable by
// the 2|T'|^3 vs |T'''| criterion, degenerate in the +-1e-8 band between.
inline StationaryReport classify(const DomainModel& dom, cplx location) {
  const cplx w = invert(dom.map, location, std::nullopt, dom.inversion_tolerance);
  const auto nd = normalized_derivatives_at(dom.map, w);
  StationaryReport rep;
  rep.location = eval(dom.map, w);
  rep.disk_preimage = w;
  rep.residual = std::abs(nd.t2 / nd.t1) / kTwoPi;
  if (rep.residual >= 1e-8)
    throw precondition_error("classify requires a stationary point (|grad gammatilde| < 1e-8)");
  rep.mu2 = norm2(nd.t1);
  rep.p = dot(nd.t3, nd.t1) / rep.mu2;
  rep.q = dot(perp(nd.t3), nd.t1) / rep.mu2;
  const double root = std::sqrt(rep.p * rep.p + rep.q * rep.q);
  rep.lambda_plus = (2.0 * rep.mu2 + root) / (4.0 * kPi);
  rep.lambda_minus = (2.0 * rep.mu2 - root) / (4.0 * kPi);
  const double t3 = std::abs(nd.t3);
  const double t1cubed = std::pow(std::abs(nd.t1), 3.0);
  if (t3 <= 1e-8 * t1cubed)
    rep.cls = StationaryClass::Valid;
  else if (t3 < 2.0 * t1cubed * (1.0 - 1e-8))
    rep.cls = StationaryClass::Stable;
  else if (t3 > 2.0 * t1cubed * (1.0 + 1e-8))
    rep.cls = StationaryClass::Unstable;
  else
    rep.cls = StationaryClass::Degenerate;
  return rep;
}

struct ScanGrid {
  int radial = 6;
  int angular = 16;
};

// Newton search for all zeros of grad gammatilde, seeded from a polar grid in
// disk coordinates; converged roots deduplicated and cross-checked against the
// T'' = 0 criterion.
inline std::vector<StationaryReport> find_stationary_points(const DomainModel& dom,
                                                            ScanGrid grid = {}) {
  std::vector<cplx> roots;
  auto consider = [&](cplx seed) {
    const auto w = detail::stationary_newton(dom.map, seed);
    if (!w) return;
    const cplx x = eval(dom.map, *w);
    for (const cplx& r : roots)
      if (std::abs(eval(dom.map, r) - x) < 1e-6) return;
    roots.push_back(*w);
  };
  consider(cplx{0.0, 0.0});
  for (int i = 0; i < grid.radial; ++i) {
    const double r = 0.9 * (i + 0.5) / double(grid.radial);
    for (int j = 0; j < grid.angular; ++j) {
      const double th = kTwoPi * double(j) / double(grid.angular);
      consider(cplx{r * std::cos(th), r * std::sin(th)});
    }
  }
  // deterministic order: by preimage angle, then radius
  std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) {
    const double aa = std::arg(a), ab = std::arg(b);
    if (aa != ab) return aa < ab;
    return std::abs(a) < std::abs(b);
  });
  std::vector<StationaryReport> out;
  for (const cplx& w : roots) {
    const auto nd = normalized_derivatives_at(dom.map, w);
    if (std::abs(nd.t2) > 1e-7 * std::abs(nd.t1)) continue;  // not a genuine root
    out.push_back(classify(dom, eval(dom.map, w)));
  }
  if (out.empty()) throw domain_error("stationary-point search failed");
  return out;
}

inline bool check_valid(const DomainModel& dom, cplx x0) {
  const cplx w = invert(dom.map, x0, std::nullopt, dom.inversion_tolerance);
  const auto nd = normalized_derivatives_at(dom.map, w);
  if (std::abs(nd.t2 / nd.t1) / kTwoPi >= 1e-8)
    throw precondition_error("check_valid requires a stationary point");
  return std::abs(nd.t3) <= 1e-8 * std::pow(std::abs(nd.t1), 3.0);
}

// Two-lobed "peanut" maps: truncation of z/(1 - c^2 z^2) = sum c^(2m) z^(2m+1)
// plus a small quadratic term that moves the saddle off center. Univalence of
// the untruncated map is exact (f(z1)=f(z2) forces (z1-z2)(1+c^2 z1 z2)=0);
// the truncations fail the coefficient certificate and carry the override.
inline ConformalMap peanut_map(double c, double a2, int max_odd_degree = 13) {
  std::vector<cplx> coeffs{cplx{1.0, 0.0}, cplx{a2, 0.0}};
  for (int deg = 3; deg <= max_odd_degree; ++deg)
    coeffs.push_back(cplx{deg % 2 == 1 ? std::pow(c, double(deg - 1)) : 0.0, 0.0});
  char buf[64];
  std::snprintf(buf, sizeof buf, "peanut_c%.2f_a2%.2f", c, a2);
  return polynomial_map(cplx{0.0, 0.0}, std::move(coeffs), buf, /*injectivity_override=*/true);
}

inline std::vector<ConformalMap> default_peanut_family() {
  return {peanut_map(0.60, 0.05), peanut_map(0.65, 0.05), peanut_map(0.70, 0.05)};
}

struct UnstableExample {
  ConformalMap map;
  StationaryReport report;
};

inline std::optional<UnstableExample> locate_unstable_example(
    const std::vector<ConformalMap>& family) {
  for (const ConformalMap& m : family) {
    const DomainModel probe = make_domain(m, cplx{0.0, 0.0});
    for (const StationaryReport& rep : find_stationary_points(probe)) {
      if (rep.cls == StationaryClass::Unstable) return UnstableExample{m, rep};
    }
  }
  return std::nullopt;
}

// True iff rotating every sample by exp(2 pi i / p) maps the sampled curve to
// itself up to an index shift of M/p. Certifies T'''(x0) = 0 without
// constructing the map when the rotation angle is in (0, pi).
inline bool check_rotation_invariance(const std::vector<cplx>& curve_samples, int p) {
  if (p < 3) throw argument_error("rotation order must be at least 3");
  const std::size_t m = curve_samples.size();
  if (m == 0 || m % std::size_t(p) != 0)
    throw argument_error("sample count must be divisible by the rotation order");
  double diameter = 0.0;
  for (const cplx& s : curve_samples) diameter = std::max(diameter, 2.0 * std::abs(s));
  const cplx rot = std::polar(1.0, kTwoPi / double(p));
  const std::size_t shift = m / std::size_t(p);
  double worst = 0.0;
  for (std::size_t k = 0; k < m; ++k)
    worst = std::max(worst, std::abs(rot * curve_samples[k] - curve_samples[(k + shift) % m]));
  return worst < 1e-6 * diameter;
}

namespace detail {

inline LawFit least_squares(const std::vector<std::pair<double, double>>& xy) {
  const double n = double(xy.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (auto [x, y] : xy) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  LawFit fit;
  const double det = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / det;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_res = 0.0;
  const double mean_y = sy / n;
  double ss_tot = 0.0;
  for (auto [x, y] : xy) {
    const double e = y - (fit.slope * x + fit.intercept);
    ss_res += e * e;
    ss_tot += (y - mean_y) * (y - mean_y);
  }
  fit.r_squared = ss_tot > 0.0 ? std::max(0.0, 1.0 - ss_res / ss_tot) : 1.0;
  return fit;
}

}  // namespace detail

// Least squares of ln tau against ln eps; the confinement exponent is -slope.
inline LawFit fit_power_law(const std::vector<std::pair<double, double>>& eps_tau) {
  if (eps_tau.size() < 3) throw argument_error("need at least 3 points to fit");
  std::vector<std::pair<double, double>> xy;
  for (auto [e, tau] : eps_tau) {
    if (!(e > 0.0) || !(tau > 0.0)) throw argument_error("power-law fit needs positive data");
    xy.emplace_back(std::log(e), std::log(tau));
  }
  LawFit fit = detail::least_squares(xy);
  fit.kind = LawKind::Power;
  fit.points = eps_tau;
  return fit;
}

// Least squares of tau against |ln eps|.
inline LawFit fit_log_law(const std::vector<std::pair<double, double>>& eps_tau) {
  if (eps_tau.size() < 3) throw argument_error("need at least 3 points to fit");
  std::vector<std::pair<double, double>> xy;
  for (auto [e, tau] : eps_tau) {
    if (!(e > 0.0)) throw argument_error("log-law fit needs positive epsilon");
    xy.emplace_back(std::abs(std::log(e)), tau);
  }
  LawFit fit = detail::least_squares(xy);
  fit.kind = LawKind::Log;
  fit.points = eps_tau;
  return fit;
}

}  // namespace vortexlab
