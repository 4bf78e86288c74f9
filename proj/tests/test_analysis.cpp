#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "vortexlab/analysis.hpp"

using namespace vortexlab;

namespace {

ConformalMap map_40z_z4() {
  return polynomial_map({0, 0}, {{40, 0}, {0, 0}, {0, 0}, {1, 0}}, "poly_40z_z4");
}

ConformalMap map_z_01z3() {
  return polynomial_map({0, 0}, {{1, 0}, {0, 0}, {0.1, 0}}, "poly_z_01z3");
}

// eigenvalues of the finite-difference Hessian of (1/2) robin at x0
std::pair<double, double> fd_half_hessian_eigs(const DomainModel& dom, cplx x0) {
  const double s = 1e-4;
  auto r = [&](double dx, double dy) { return robin(dom, x0 + cplx{dx, dy}); };
  const double h11 = 0.5 * (r(s, 0) - 2.0 * r(0, 0) + r(-s, 0)) / (s * s);
  const double h22 = 0.5 * (r(0, s) - 2.0 * r(0, 0) + r(0, -s)) / (s * s);
  const double h12 = 0.5 * (r(s, s) - r(s, -s) - r(-s, s) + r(-s, -s)) / (4.0 * s * s);
  const double mean = 0.5 * (h11 + h22);
  const double root = std::sqrt(0.25 * (h11 - h22) * (h11 - h22) + h12 * h12);
  return {mean + root, mean - root};
}

void check_report_invariants(const StationaryReport& r) {
  CHECK(r.lambda_plus >= r.lambda_minus);
  CHECK(r.lambda_plus > 0.0);
  const double root = std::sqrt(r.p * r.p + r.q * r.q);
  CHECK(std::abs(r.lambda_plus - (2.0 * r.mu2 + root) / (4.0 * kPi)) < 1e-12);
  CHECK(std::abs(r.lambda_minus - (2.0 * r.mu2 - root) / (4.0 * kPi)) < 1e-12);
  if (r.cls == StationaryClass::Valid) {
    CHECK(std::abs(r.p) <= 1e-8 * r.mu2);
    CHECK(std::abs(r.q) <= 1e-8 * r.mu2);
    CHECK(std::abs(r.lambda_plus - r.lambda_minus) < 1e-10 * r.lambda_plus);
  }
}

}  // namespace

TEST_CASE("find_stationary_points on the reference domains") {
  const auto disk_pts = find_stationary_points(make_domain(identity_map()));
  REQUIRE(disk_pts.size() == 1);
  CHECK(std::abs(disk_pts[0].location) < 1e-10);
  CHECK(disk_pts[0].cls == StationaryClass::Valid);

  const auto quartic_pts = find_stationary_points(make_domain(map_40z_z4()));
  REQUIRE(quartic_pts.size() == 1);
  CHECK(std::abs(quartic_pts[0].location) < 1e-10);
  CHECK(quartic_pts[0].residual < 1e-10);
  CHECK(quartic_pts[0].cls == StationaryClass::Valid);

  const auto pent_pts = find_stationary_points(make_domain(sc_regular_polygon(5)));
  REQUIRE(pent_pts.size() == 1);
  CHECK(std::abs(pent_pts[0].location) < 1e-10);
  CHECK(pent_pts[0].cls == StationaryClass::Valid);

  for (const auto& pts : {disk_pts, quartic_pts, pent_pts})
    for (const auto& r : pts) check_report_invariants(r);
}

TEST_CASE("find_stationary_points is stable under grid refinement") {
  const auto dom = make_domain(map_z_01z3());
  const auto coarse = find_stationary_points(dom, {6, 16});
  const auto fine = find_stationary_points(dom, {12, 32});
  REQUIRE(coarse.size() == fine.size());
  for (std::size_t i = 0; i < coarse.size(); ++i)
    CHECK(std::abs(coarse[i].location - fine[i].location) < 1e-6);
}

TEST_CASE("classify") {
  const auto disk = make_domain(identity_map());
  const auto rd = classify(disk, {0.0, 0.0});
  CHECK(rd.cls == StationaryClass::Valid);
  CHECK(std::abs(rd.lambda_plus - 1.0 / kTwoPi) < 1e-12);
  CHECK(std::abs(rd.lambda_minus - 1.0 / kTwoPi) < 1e-12);

  const auto cubic = make_domain(map_z_01z3());
  const auto rc = classify(cubic, {0.0, 0.0});
  CHECK(rc.cls == StationaryClass::Stable);
  CHECK(std::abs(rc.lambda_plus - 2.6 / (4.0 * kPi)) < 1e-10);
  CHECK(std::abs(rc.lambda_minus - 1.4 / (4.0 * kPi)) < 1e-10);
  check_report_invariants(rc);

  const auto [fp, fm] = fd_half_hessian_eigs(cubic, {0.0, 0.0});
  CHECK(std::abs(fp - rc.lambda_plus) < 1e-3 * rc.lambda_plus);
  CHECK(std::abs(fm - rc.lambda_minus) < 1e-3 * rc.lambda_minus);

  // p^2 + q^2 = |T'''|^2 / |T'|^2 at the stationary point
  CHECK(std::abs(rc.p * rc.p + rc.q * rc.q - 0.36) < 1e-10);

  CHECK_THROWS_AS(classify(make_domain(map_40z_z4()), {1.0, 0.0}),
                  vortexlab::precondition_error);
}

TEST_CASE("check_valid") {
  CHECK(check_valid(make_domain(identity_map()), {0.0, 0.0}));
  CHECK_FALSE(check_valid(make_domain(map_z_01z3()), {0.0, 0.0}));
  const auto tri = make_domain(sc_regular_polygon(3));
  CHECK(check_valid(tri, tri.x0));
  CHECK_THROWS_AS(check_valid(make_domain(map_40z_z4()), {2.0, 0.0}),
                  vortexlab::precondition_error);
}

TEST_CASE("locate_unstable_example") {
  CHECK_FALSE(locate_unstable_example({identity_map()}).has_value());
  CHECK_FALSE(locate_unstable_example({map_z_01z3()}).has_value());

  const auto found = locate_unstable_example(default_peanut_family());
  REQUIRE(found.has_value());
  const auto& rep = found->report;
  CHECK(rep.cls == StationaryClass::Unstable);
  CHECK(rep.lambda_plus * rep.lambda_minus < 0.0);
  check_report_invariants(rep);

  // confirmed by the finite-difference Hessian: eigenvalues of opposite sign
  const auto dom = make_domain(found->map, rep.disk_preimage);
  const auto [fp, fm] = fd_half_hessian_eigs(dom, rep.location);
  CHECK(fp > 0.0);
  CHECK(fm < 0.0);
  CHECK(std::abs(fp - rep.lambda_plus) < 1e-3 * std::abs(rep.lambda_plus));
  CHECK(std::abs(fm - rep.lambda_minus) < 1e-3 * std::abs(rep.lambda_minus));
}

TEST_CASE("classification is invariant under the normalization freedom") {
  // mu^2, p, q are unchanged when (t1,t2,t3) pick up a unimodular factor
  const auto dom = make_domain(map_z_01z3());
  const auto rep = classify(dom, {0.0, 0.0});
  for (cplx lambda : {cplx{0.0, 1.0}, std::polar(1.0, kPi / 7.0)}) {
    const cplx s1 = lambda * dom.t1, s3 = lambda * dom.t3;
    const double mu2 = norm2(s1);
    CHECK(std::abs(mu2 - rep.mu2) < 1e-10);
    CHECK(std::abs(dot(s3, s1) / mu2 - rep.p) < 1e-10);
    CHECK(std::abs(dot(perp(s3), s1) / mu2 - rep.q) < 1e-10);
  }
}

TEST_CASE("check_rotation_invariance") {
  std::vector<cplx> circle;
  for (int k = 0; k < 400; ++k) circle.push_back(std::polar(1.0, kTwoPi * k / 400.0));
  CHECK(check_rotation_invariance(circle, 8));

  std::vector<cplx> b1;
  for (int k = 0; k < 400; ++k) {
    const double x = double(k) / 400.0;
    b1.push_back((2.0 + std::cos(8.0 * kPi * x)) * std::polar(1.0, kTwoPi * x));
  }
  CHECK(check_rotation_invariance(b1, 4));
  CHECK_FALSE(check_rotation_invariance(b1, 8));

  std::vector<cplx> ellipse;
  for (int k = 0; k < 300; ++k) {
    const double th = kTwoPi * k / 300.0;
    ellipse.push_back({2.0 * std::cos(th), std::sin(th)});
  }
  CHECK_FALSE(check_rotation_invariance(ellipse, 3));

  CHECK_THROWS_AS(check_rotation_invariance(circle, 7), vortexlab::argument_error);  // 400 % 7
  CHECK_THROWS_AS(check_rotation_invariance(circle, 2), vortexlab::argument_error);
}

TEST_CASE("law fits") {
  std::vector<std::pair<double, double>> power;
  for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) power.emplace_back(eps, std::pow(eps, -0.4));
  const auto pf = fit_power_law(power);
  CHECK(pf.kind == LawKind::Power);
  CHECK(std::abs(pf.slope - (-0.4)) < 1e-12);
  CHECK(std::abs(pf.r_squared - 1.0) < 1e-12);

  std::vector<std::pair<double, double>> logpts;
  for (double eps : {1e-1, 1e-2, 1e-3, 1e-4})
    logpts.emplace_back(eps, 3.0 * std::abs(std::log(eps)) + 1.0);
  const auto lf = fit_log_law(logpts);
  CHECK(lf.kind == LawKind::Log);
  CHECK(std::abs(lf.slope - 3.0) < 1e-12);
  CHECK(std::abs(lf.intercept - 1.0) < 1e-10);
  CHECK(std::abs(lf.r_squared - 1.0) < 1e-12);

  CHECK_THROWS_AS(fit_power_law({{0.1, 1.0}, {0.01, 2.0}}), vortexlab::argument_error);
  CHECK_THROWS_AS(fit_power_law({{0.1, 1.0}, {0.01, -2.0}, {0.001, 3.0}}),
                  vortexlab::argument_error);
}
