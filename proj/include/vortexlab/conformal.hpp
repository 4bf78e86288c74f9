#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "vortexlab/core.hpp"

namespace vortexlab {

enum class MapKind { Identity, Polynomial, RegularPolygon };

enum class Injectivity { Proven, Unproven };

// A univalent map f from the unit disk onto the domain.
//
// Polynomial: f(w) = x0 + sum_{k>=1} coeffs[k-1] w^k, coefficient of degree 1
// nonzero. RegularPolygon: f'(w) = scale * (1 - w^n)^(1-2/n), integrated from
// 0, with scale chosen so the image vertices lie on the unit circle.
struct ConformalMap {
  MapKind kind = MapKind::Identity;
  cplx offset{0.0, 0.0};          // x0, Polynomial only
  std::vector<cplx> coeffs;       // degree 1 first, Polynomial only
  int sides = 0;                  // RegularPolygon only
  cplx scale{1.0, 0.0};           // RegularPolygon prefactor
  std::string label;
  bool injectivity_override = false;  // allow dynamics use despite Unproven
};

inline ConformalMap identity_map() {
  ConformalMap m;
  m.kind = MapKind::Identity;
  m.label = "identity";
  return m;
}

inline ConformalMap polynomial_map(cplx x0, std::vector<cplx> coeffs, std::string label = "",
                                   bool injectivity_override = false) {
  if (coeffs.empty() || coeffs[0] == cplx{0.0, 0.0})
    throw argument_error("polynomial map requires a nonzero degree-1 coefficient");
  ConformalMap m;
  m.kind = MapKind::Polynomial;
  m.offset = x0;
  m.coeffs = std::move(coeffs);
  m.label = std::move(label);
  m.injectivity_override = injectivity_override;
  return m;
}

// Sufficient univalence condition |a1| > sum_{k>=2} k|a_k|, extended to all
// present degrees. Identity and the polygon maps are univalent by construction.
inline Injectivity check_injectivity(const ConformalMap& map) {
  if (map.kind != MapKind::Polynomial) return Injectivity::Proven;
  double tail = 0.0;
  for (std::size_t i = 1; i < map.coeffs.size(); ++i)
    tail += double(i + 1) * std::abs(map.coeffs[i]);
  return std::abs(map.coeffs[0]) > tail ? Injectivity::Proven : Injectivity::Unproven;
}

namespace detail {

// Gauss-Legendre 16-point nodes/weights on [-1,1].
inline constexpr std::array<double, 8> kGlNodes = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
    0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499};
inline constexpr std::array<double, 8> kGlWeights = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

template <class F>
cplx gauss_legendre(F&& f, double a, double b) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  cplx acc{0.0, 0.0};
  for (int i = 0; i < 8; ++i) {
    acc += kGlWeights[i] * (f(mid + half * kGlNodes[i]) + f(mid - half * kGlNodes[i]));
  }
  return half * acc;
}

inline double polygon_exponent(int n) { return 1.0 - 2.0 / double(n); }

// c = 1 / int_0^1 (1-s^n)^(1-2/n) ds so that f(1) = 1 (a vertex).
inline double polygon_scale(int n) {
  const double a = 1.0 / double(n), b = 2.0 - 2.0 / double(n);
  const double beta = std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
  return double(n) / beta;
}

// f'(w) and the logarithmic-derivative ladder for the polygon map.
inline cplx polygon_fprime(const ConformalMap& m, cplx w) {
  const double alpha = polygon_exponent(m.sides);
  return m.scale * std::pow(1.0 - std::pow(w, m.sides), alpha);
}

// Series f(w) = c sum_m b_m w^(nm+1)/(nm+1), b_{m+1} = b_m (m-alpha)/(m+1),
// truncated when the geometric tail bound drops below 1e-12.
inline cplx polygon_eval_series(const ConformalMap& m, cplx w) {
  const int n = m.sides;
  const double alpha = polygon_exponent(n);
  const cplx wn = std::pow(w, n);
  const double r = std::abs(wn);
  cplx sum{0.0, 0.0};
  double bm = 1.0;
  cplx wp = w;  // w^(nm+1)
  for (int mterm = 0;; ++mterm) {
    sum += bm * wp / double(n * mterm + 1);
    const double next = bm * (double(mterm) - alpha) / double(mterm + 1);
    wp *= wn;
    // tail bound: |b_{m+1}| r^{n(m+1)+1} / ((n(m+1)+1)(1-r^n))
    const double tail = std::abs(next) * std::abs(wp) / (double(n * (mterm + 1) + 1) * (1.0 - r));
    bm = next;
    if (tail < 1e-12 || mterm > 2000000) break;
  }
  return m.scale * sum;
}

inline cplx polygon_eval_path(const ConformalMap& m, cplx w) {
  // integrate f' along the ray [0, w]; panels refine toward the endpoint where
  // f' loses smoothness when w approaches a prevertex
  auto integrand = [&](double t) { return polygon_fprime(m, t * w) * w; };
  // panels refine geometrically toward t = 1 where f' can lose smoothness
  cplx total{0.0, 0.0};
  double a = 0.0;
  const int panels = 40;
  for (int i = 0; i < panels; ++i) {
    const double b = (i + 1 == panels) ? 1.0 : 1.0 - 0.5 * (1.0 - a);
    total += gauss_legendre(integrand, a, b);
    a = b;
  }
  return total;
}

}  // namespace detail

inline void require_in_closed_disk(cplx w) {
  if (std::abs(w) > 1.0 + 1e-12) throw domain_error("evaluation point outside closed unit disk");
}

inline cplx eval(const ConformalMap& map, cplx w) {
  require_in_closed_disk(w);
  switch (map.kind) {
    case MapKind::Identity:
      return w;
    case MapKind::Polynomial: {
      // Horner in ascending-degree deterministic order
      cplx acc{0.0, 0.0};
      for (auto it = map.coeffs.rbegin(); it != map.coeffs.rend(); ++it) acc = acc * w + *it;
      return map.offset + acc * w;
    }
    case MapKind::RegularPolygon:
      if (std::abs(w) <= 0.999) return detail::polygon_eval_series(map, w);
      return detail::polygon_eval_path(map, w);
  }
  throw argument_error("unknown map kind");
}

inline cplx derivative(const ConformalMap& map, cplx w, int order) {
  if (order < 1 || order > 4) throw argument_error("derivative order must be in 1..4");
  require_in_closed_disk(w);
  switch (map.kind) {
    case MapKind::Identity:
      return order == 1 ? cplx{1.0, 0.0} : cplx{0.0, 0.0};
    case MapKind::Polynomial: {
      cplx acc{0.0, 0.0};
      const int n = int(map.coeffs.size());
      for (int k = n; k >= 1; --k) {
        if (k < order) break;
        double fac = 1.0;
        for (int j = 0; j < order; ++j) fac *= double(k - j);
        acc = acc * w + fac * map.coeffs[std::size_t(k - 1)];
      }
      return acc;
    }
    case MapKind::RegularPolygon: {
      const int n = map.sides;
      const double alpha = detail::polygon_exponent(n);
      const cplx f1 = detail::polygon_fprime(map, w);
      if (order == 1) return f1;
      // L = (ln f')' and its derivatives; f'' = f'L, f''' = f'(L^2+L'),
      // f'''' = f'(L^3 + 3LL' + L'')
      const cplx u = std::pow(w, n);
      const cplx d = 1.0 - u;
      const cplx wn1 = (n >= 1) ? std::pow(w, n - 1) : cplx{0.0, 0.0};
      const cplx wn2 = (n >= 2) ? std::pow(w, n - 2) : cplx{0.0, 0.0};
      const cplx wn3 = (n >= 3) ? std::pow(w, n - 3) : cplx{0.0, 0.0};
      const cplx L = -alpha * double(n) * wn1 / d;
      const cplx A = double(n - 1) * wn2 * d + double(n) * wn1 * wn1;
      const cplx Lp = -alpha * double(n) * A / (d * d);
      if (order == 2) return f1 * L;
      if (order == 3) return f1 * (L * L + Lp);
      const cplx Ap = double(n - 1) * double(n - 2) * wn3 * d + double(n) * double(n - 1) * wn2 * wn1;
      const cplx Lpp = -alpha * double(n) * (Ap * d + 2.0 * double(n) * wn1 * A) / (d * d * d);
      return f1 * (L * L * L + 3.0 * L * Lp + Lpp);
    }
  }
  throw argument_error("unknown map kind");
}

// Newton inversion of f(w) = x with polar-grid seeding; residual convergence
// criterion |f(w)-x| <= tol (1+|x|).
inline cplx invert(const ConformalMap& map, cplx x, std::optional<cplx> seed = std::nullopt,
                   double tol = 1e-12) {
  if (map.kind == MapKind::Identity) {
    if (std::abs(x) >= 1.0 + 1e-12) throw inversion_error("point outside domain or inversion failure");
    return x;
  }
  auto try_newton = [&](cplx w0) -> std::optional<cplx> {
    cplx w = w0;
    for (int it = 0; it < 64; ++it) {
      const cplx r = eval(map, w) - x;
      if (std::abs(r) <= tol * (1.0 + std::abs(x)) && std::abs(w) < 1.0 + 1e-10)
        return w;
      const cplx fp = derivative(map, w, 1);
      if (std::abs(fp) < 1e-300) return std::nullopt;
      cplx step = r / fp;
      const double smax = 0.5;
      if (std::abs(step) > smax) step *= smax / std::abs(step);
      w -= step;
      if (std::abs(w) > 1.0) w *= (1.0 - 1e-12) / std::abs(w);
    }
    return std::nullopt;
  };
  if (seed) {
    if (auto w = try_newton(*seed)) return *w;
  }
  // best-residual seed from a 32x16 polar grid
  cplx best{0.0, 0.0};
  double best_res = std::abs(eval(map, best) - x);
  for (int i = 0; i < 16; ++i) {
    const double r = (i + 0.5) / 16.0;
    for (int j = 0; j < 32; ++j) {
      const double th = kTwoPi * double(j) / 32.0;
      const cplx w{r * std::cos(th), r * std::sin(th)};
      const double res = std::abs(eval(map, w) - x);
      if (res < best_res) {
        best_res = res;
        best = w;
      }
    }
  }
  if (auto w = try_newton(best)) return *w;
  throw inversion_error("point outside domain or inversion failure");
}

// First three derivatives at x0 = f(w0) of the normalized map
// T = phi o f^{-1}, phi(z) = (z - w0)/(1 - conj(w0) z), so that T(x0) = 0.
// Closed-form chain rule through the inverse-function derivatives of f.
struct NormalizedDerivatives {
  cplx t1, t2, t3;
};

inline NormalizedDerivatives normalized_derivatives_at(const ConformalMap& map, cplx w0) {
  if (std::abs(w0) >= 1.0) throw argument_error("normalization point must be strictly inside the disk");
  const cplx f1 = derivative(map, w0, 1);
  const cplx f2 = derivative(map, w0, 2);
  const cplx f3 = derivative(map, w0, 3);
  const cplx g1 = 1.0 / f1;
  const cplx g2 = -f2 / (f1 * f1 * f1);
  const cplx g3 = (3.0 * f2 * f2 - f1 * f3) / (f1 * f1 * f1 * f1 * f1);
  const cplx c = std::conj(w0);
  const double D = 1.0 - norm2(w0);
  const cplx p1 = 1.0 / D;                   // phi'(w0)
  const cplx p2 = 2.0 * c / (D * D);         // phi''(w0)
  const cplx p3 = 6.0 * c * c / (D * D * D); // phi'''(w0)
  NormalizedDerivatives nd;
  nd.t1 = p1 * g1;
  nd.t2 = p2 * g1 * g1 + p1 * g2;
  nd.t3 = p3 * g1 * g1 * g1 + 3.0 * p2 * g1 * g2 + p1 * g3;
  return nd;
}

// Schwarz-Christoffel map of the unit disk onto the regular n-gon with
// vertices at e^(2*pi*i*k/n).
inline ConformalMap sc_regular_polygon(int n) {
  if (n < 3) throw argument_error("regular polygon needs n >= 3");
  ConformalMap m;
  m.kind = MapKind::RegularPolygon;
  m.sides = n;
  m.scale = detail::polygon_scale(n);
  m.label = "regular_polygon_" + std::to_string(n);
  return m;
}

// Taylor coefficients of f' around 0 up to max_deg (inclusive), degree 0 first.
inline std::vector<cplx> taylor_fprime(const ConformalMap& map, int max_deg) {
  std::vector<cplx> out(std::size_t(max_deg) + 1, cplx{0.0, 0.0});
  switch (map.kind) {
    case MapKind::Identity:
      out[0] = 1.0;
      break;
    case MapKind::Polynomial:
      for (std::size_t k = 1; k <= map.coeffs.size(); ++k)
        if (int(k) - 1 <= max_deg) out[k - 1] = double(k) * map.coeffs[k - 1];
      break;
    case MapKind::RegularPolygon: {
      const int n = map.sides;
      const double alpha = detail::polygon_exponent(n);
      double bm = 1.0;
      for (int mterm = 0; n * mterm <= max_deg; ++mterm) {
        out[std::size_t(n * mterm)] = map.scale * bm;
        bm *= (double(mterm) - alpha) / double(mterm + 1);
      }
      break;
    }
  }
  return out;
}

// A conformal map together with the normalization data at a chosen point x0:
// the disk preimage w0, and T'(x0), T''(x0), T'''(x0) for T = phi_{w0} o f^{-1}.
struct DomainModel {
  ConformalMap map;
  cplx w0{0.0, 0.0};
  cplx x0{0.0, 0.0};
  cplx t1{1.0, 0.0}, t2{0.0, 0.0}, t3{0.0, 0.0};
  double inversion_tolerance = 1e-12;
  double boundary_margin = 1e-6;
};

inline DomainModel make_domain(ConformalMap map, cplx w0 = cplx{0.0, 0.0}) {
  if (check_injectivity(map) == Injectivity::Unproven && !map.injectivity_override)
    throw precondition_error("map injectivity unproven; set injectivity_override to use it");
  DomainModel d;
  d.map = std::move(map);
  d.w0 = w0;
  d.x0 = eval(d.map, w0);
  const auto nd = normalized_derivatives_at(d.map, w0);
  d.t1 = nd.t1;
  d.t2 = nd.t2;
  d.t3 = nd.t3;
  if (std::abs(d.t1) <= 0.0) throw precondition_error("degenerate normalization: T'(x0) = 0");
  return d;
}

// Pointwise values/derivatives of the normalized map T at an arbitrary
// interior point, via one inversion plus the chain rule.
struct TDerivs {
  cplx w;   // f^{-1}(x)
  cplx T, T1, T2, T3;
};

inline TDerivs t_derivs(const DomainModel& dom, cplx x, std::optional<cplx> seed = std::nullopt) {
  TDerivs td;
  td.w = invert(dom.map, x, seed, dom.inversion_tolerance);
  const cplx f1 = derivative(dom.map, td.w, 1);
  const cplx f2 = derivative(dom.map, td.w, 2);
  const cplx f3 = derivative(dom.map, td.w, 3);
  const cplx g1 = 1.0 / f1;
  const cplx g2 = -f2 / (f1 * f1 * f1);
  const cplx g3 = (3.0 * f2 * f2 - f1 * f3) / (f1 * f1 * f1 * f1 * f1);
  const cplx c = std::conj(dom.w0);
  const double D = 1.0 - norm2(dom.w0);
  const cplx den = 1.0 - c * td.w;
  td.T = (td.w - dom.w0) / den;
  const cplx p1 = D / (den * den);
  const cplx p2 = 2.0 * c * D / (den * den * den);
  const cplx p3 = 6.0 * c * c * D / (den * den * den * den);
  td.T1 = p1 * g1;
  td.T2 = p2 * g1 * g1 + p1 * g2;
  td.T3 = p3 * g1 * g1 * g1 + 3.0 * p2 * g1 * g2 + p1 * g3;
  return td;
}

// Distance from x0 to the boundary, estimated as min over boundary samples.
inline double boundary_distance(const DomainModel& dom, int samples = 4096) {
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    const double th = kTwoPi * double(k) / double(samples);
    const cplx b = eval(dom.map, cplx{std::cos(th), std::sin(th)});
    best = std::min(best, std::abs(b - dom.x0));
  }
  return best;
}

}  // namespace vortexlab
