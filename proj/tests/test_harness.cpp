#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <sys/wait.h>

#include "vortexlab/harness.hpp"

using namespace vortexlab;
namespace harness = vortexlab::harness;
namespace fs = std::filesystem;
using harness::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  fs::path old;
  TempDir() {
    old = fs::current_path();
    path = fs::temp_directory_path() /
           ("vortexlab_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
    fs::current_path(path);
  }
  ~TempDir() {
    fs::current_path(old);
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

int run_cli(const std::string& args) {
#ifdef VORTEXLAB_CLI_PATH
  const int status = std::system((std::string(VORTEXLAB_CLI_PATH) + " " + args +
                                  " >/dev/null 2>/dev/null")
                                     .c_str());
  return WEXITSTATUS(status);
#else
  (void)args;
  return -1;
#endif
}

}  // namespace

TEST_CASE("config serialization round-trips byte-identically") {
  for (const std::string& name : harness::preset_names()) {
    const auto cfg = harness::preset(name);
    const std::string once = harness::serialize(cfg);
    const std::string twice = harness::serialize(harness::parse_config(once));
    CHECK(once == twice);
  }
}

TEST_CASE("domain spec schema") {
  const json j = {{"kind", "polynomial"},
                  {"x0", {0.5, -0.25}},
                  {"coeffs", {{40.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}}},
                  {"label", "shifted"}};
  const auto m = harness::parse_domain(j);
  CHECK(m.kind == MapKind::Polynomial);
  CHECK(m.offset == cplx{0.5, -0.25});
  REQUIRE(m.coeffs.size() == 4);
  CHECK(m.label == "shifted");

  const auto back = harness::parse_domain(harness::serialize_domain(m));
  CHECK(back.offset == m.offset);
  CHECK(back.coeffs == m.coeffs);

  CHECK(harness::parse_domain(json{{"kind", "regular_polygon"}, {"n", 5}}).sides == 5);
  CHECK(harness::parse_domain(json{{"kind", "identity"}}).kind == MapKind::Identity);
  CHECK_THROWS_AS(harness::parse_domain(json{{"kind", "moebius"}}), vortexlab::argument_error);
  CHECK_THROWS_AS(harness::parse_domain(json{{"kind", "polynomial"}, {"coeffs", json::array()}}),
                  vortexlab::argument_error);
}

TEST_CASE("validate rejects malformed configs") {
  auto cfg = harness::preset("disk-orbit");
  CHECK_NOTHROW(harness::validate(cfg));

  auto bad = cfg;
  bad.experiment = "nonsense";
  CHECK_THROWS_AS(harness::validate(bad), vortexlab::argument_error);

  bad = cfg;
  bad.dt = 0.0;
  CHECK_THROWS_AS(harness::validate(bad), vortexlab::argument_error);

  auto sweep = harness::preset("thm-power-confinement");
  sweep.experiment = "exit_sweep";
  sweep.epsilons.clear();
  CHECK_THROWS_AS(harness::validate(sweep), vortexlab::argument_error);

  sweep = harness::preset("thm-power-confinement");
  sweep.beta = 0.6;
  CHECK_THROWS_AS(harness::validate(sweep), vortexlab::argument_error);

  sweep = harness::preset("unstable-log-exit");
  sweep.epsilons = {1e-3, 1e-2};  // not decreasing
  CHECK_THROWS_AS(harness::validate(sweep), vortexlab::argument_error);

  auto rot = cfg;
  rot.experiment = "rotation_check";
  rot.curves = {"fig5_left"};
  rot.rotation_order = 3;
  rot.samples = 400;  // not divisible by 3
  CHECK_THROWS_AS(harness::validate(rot), vortexlab::argument_error);
}

TEST_CASE("presets") {
  const auto orbit = harness::preset("disk-orbit");
  CHECK(orbit.experiment == "single_vortex");
  REQUIRE(orbit.domains.size() == 1);
  CHECK(orbit.domains[0].kind == MapKind::Identity);
  CHECK(orbit.z0 == cplx{0.5, 0.0});
  CHECK(orbit.dt == 1e-3);

  const auto conf = harness::preset("thm-power-confinement");
  CHECK(conf.experiment == "blob_confinement");
  CHECK(conf.epsilons == std::vector<double>{0.05});
  CHECK(conf.beta == 0.45);
  CHECK(conf.n_particles == 200);

  CHECK_THROWS_WITH(harness::preset("nonexistent"),
                    Catch::Matchers::ContainsSubstring("disk-orbit"));
}

TEST_CASE("sample_boundary") {
  const auto pts = harness::sample_boundary(identity_map(), 4);
  REQUIRE(pts.size() == 5);
  CHECK(std::abs(pts[0] - cplx{1, 0}) < 1e-15);
  CHECK(std::abs(pts[1] - cplx{0, 1}) < 1e-15);
  CHECK(std::abs(pts[2] - cplx{-1, 0}) < 1e-15);
  CHECK(std::abs(pts[3] - cplx{0, -1}) < 1e-15);
  CHECK(pts[4] == pts[0]);

  const auto q = polynomial_map({0, 0}, {{40, 0}, {0, 0}, {0, 0}, {1, 0}}, "poly_40z_z4");
  const auto qb = harness::sample_boundary(q, 512);
  REQUIRE(qb.size() == 513);
  CHECK(std::abs(qb[0] - cplx{41.0, 0.0}) < 1e-12);
  CHECK(qb.back() == qb.front());
  CHECK(harness::polyline_is_simple(qb));
}

TEST_CASE("sample_curve and builtin curves") {
  const auto& left = harness::find_curve("fig5_left");
  CHECK(left.rotation_order == 4);
  const auto pts = harness::sample_curve(left.b, 400);
  REQUIRE(pts.size() == 400);
  CHECK(std::abs(pts[0] - cplx{3.0, 0.0}) < 1e-15);
  CHECK_THROWS_AS(harness::find_curve("fig7_bogus"), vortexlab::argument_error);
}

TEST_CASE("polyline_is_simple flags crossings") {
  const std::vector<cplx> eight{{0, 0}, {1, 1}, {1, 0}, {0, 1}, {0, 0}};
  CHECK_FALSE(harness::polyline_is_simple(eight));
  const std::vector<cplx> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 0}};
  CHECK(harness::polyline_is_simple(square));
}

TEST_CASE("apply_override") {
  json cfg = harness::to_json(harness::preset("disk-orbit"));
  harness::apply_override(cfg, "numeric.dt", "0.01");
  harness::apply_override(cfg, "output.prefix", "elsewhere");
  const auto parsed = harness::parse_config(cfg);
  CHECK(parsed.dt == 0.01);
  CHECK(parsed.output_prefix == "elsewhere");
  CHECK_THROWS_AS(harness::apply_override(cfg, "", "1"), vortexlab::argument_error);
}

TEST_CASE("run stationary_scan writes a report") {
  TempDir tmp;
  auto cfg = harness::preset("disk-orbit");
  cfg.experiment = "stationary_scan";
  cfg.output_prefix = "scan";
  REQUIRE(harness::run(cfg) == 0);
  const json rep = json::parse(slurp("scan_stationary_scan.json"));
  CHECK(rep["version"] == harness::kVersion);
  REQUIRE(rep["result"].size() == 1);
  CHECK(rep["result"][0]["class"] == "valid");
  CHECK(std::abs(rep["result"][0]["location"][0].get<double>()) < 1e-10);
  CHECK(std::abs(rep["result"][0]["location"][1].get<double>()) < 1e-10);
}

TEST_CASE("run single_vortex emits a config-stamped CSV") {
  TempDir tmp;
  auto cfg = harness::preset("disk-orbit");
  cfg.horizon = 0.05;
  cfg.record_every = 10;
  REQUIRE(harness::run(cfg) == 0);
  const std::string csv = slurp("disk_orbit_trajectory.csv");
  CHECK(csv.rfind("# vortexlab", 0) == 0);
  CHECK(csv.find("# config {\"experiment\":\"single_vortex\"") != std::string::npos);
  CHECK(csv.find("t,x,y,robin\n") != std::string::npos);
  // 17 significant digits survive for the initial x = 0.5 row
  CHECK(csv.find("0,0.5,0,") != std::string::npos);
}

TEST_CASE("run boundary_export") {
  TempDir tmp;
  auto cfg = harness::preset("fig2-boundaries");
  REQUIRE(harness::run(cfg) == 0);
  const std::string csv = slurp("fig2_poly_40z_z4.csv");
  CHECK(csv.find("k,x,y\n") != std::string::npos);
  CHECK(csv.find("\n0,41,0\n") != std::string::npos);
  CHECK(fs::exists("fig2_identity.csv"));
}

TEST_CASE("run validation failure returns exit code 2") {
  TempDir tmp;
  auto cfg = harness::preset("thm-power-confinement");
  cfg.experiment = "exit_sweep";
  cfg.epsilons.clear();
  CHECK(harness::run(cfg) == 2);
}

TEST_CASE("run blob_confinement writes diagnostics and result") {
  TempDir tmp;
  auto cfg = harness::preset("thm-power-confinement");
  cfg.n_particles = 20;
  cfg.horizon_exponent = 0.0;
  cfg.horizon = 0.02;
  cfg.record_every = 5;
  REQUIRE(harness::run(cfg) == 0);
  const std::string csv = slurp("confinement_diagnostics.csv");
  CHECK(csv.find("t,Bx,By,I,R,H,m4,m8,tail_r1,tail_r2,tail_r3\n") != std::string::npos);
  const json res = json::parse(slurp("confinement_result.json"));
  CHECK(res["result"]["horizon_reached"] == true);
  CHECK(res["config"]["numeric"]["n_particles"] == 20);
}

TEST_CASE("runs are reproducible byte for byte across thread counts") {
  TempDir tmp;
  auto cfg = harness::preset("thm-power-confinement");
  cfg.n_particles = 16;
  cfg.horizon_exponent = 0.0;
  cfg.horizon = 0.02;
  cfg.record_every = 2;
  harness::RunOptions one, many;
  one.threads = 1;
  many.threads = 8;
  one.output_prefix = "a";
  many.output_prefix = "b";
  REQUIRE(harness::run(cfg, one) == 0);
  REQUIRE(harness::run(cfg, many) == 0);
  const std::string da = slurp("a_diagnostics.csv"), db = slurp("b_diagnostics.csv");
  // identical except for the echoed output prefix inside the config comment
  CHECK(da.substr(da.find("t,Bx")) == db.substr(db.find("t,Bx")));
}

TEST_CASE("run rotation_check on the builtin curves") {
  TempDir tmp;
  harness::ExperimentConfig cfg;
  cfg.experiment = "rotation_check";
  cfg.curves = {"fig5_left"};
  cfg.rotation_order = 4;
  cfg.samples = 400;
  cfg.output_prefix = "rot";
  REQUIRE(harness::run(cfg) == 0);
  const json rep = json::parse(slurp("rot_rotation.json"));
  CHECK(rep["result"][0]["invariant"] == true);
}

TEST_CASE("run lemdev_scan emits jsonl with version header") {
  TempDir tmp;
  auto cfg = harness::preset("lemdev-rate");
  cfg.epsilons = {0.1};
  cfg.samples = 50;
  REQUIRE(harness::run(cfg) == 0);
  std::istringstream lines(slurp("lemdev_lemdev.jsonl"));
  std::string first, second;
  std::getline(lines, first);
  std::getline(lines, second);
  CHECK(json::parse(first)["version"] == harness::kVersion);
  CHECK(json::parse(second).contains("sup_ratio"));
}

#ifdef VORTEXLAB_CLI_PATH
TEST_CASE("CLI exit codes") {
  TempDir tmp;
  CHECK(run_cli("preset nonexistent") == 2);
  CHECK(run_cli("preset disk-orbit") == 0);
  CHECK(run_cli("run /no/such/config.json") == 2);
  CHECK(run_cli("preset disk-orbit numeric.horizon=0.01 --run") == 0);
  CHECK(fs::exists("disk_orbit_trajectory.csv"));

  std::ofstream("domain.json") << harness::serialize_domain(identity_map()).dump();
  CHECK(run_cli("boundary domain.json --samples 64") == 0);
  CHECK(fs::exists("boundary_identity.csv"));
}
#endif
