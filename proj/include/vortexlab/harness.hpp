#pragma once

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vortexlab/analysis.hpp"
#include "vortexlab/conformal.hpp"
#include "vortexlab/core.hpp"
#include "vortexlab/dynamics.hpp"
#include "vortexlab/greens.hpp"

namespace vortexlab::harness {

using json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "vortexlab 1.0.0";

// ---------------------------------------------------------------------------
// logging, gated by VORTEXLAB_LOG in {error, warn, info, debug}
// ---------------------------------------------------------------------------

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

inline LogLevel log_level() {
  static const LogLevel lvl = [] {
    const char* env = std::getenv("VORTEXLAB_LOG");
    if (!env) return LogLevel::Warn;
    const std::string s(env);
    if (s == "error") return LogLevel::Error;
    if (s == "warn") return LogLevel::Warn;
    if (s == "info") return LogLevel::Info;
    if (s == "debug") return LogLevel::Debug;
    return LogLevel::Warn;
  }();
  return lvl;
}

inline void log(LogLevel lvl, const std::string& msg) {
  if (lvl > log_level()) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::cerr << "[" << names[int(lvl)] << "] " << msg << "\n";
}

// ---------------------------------------------------------------------------
// built-in parametric boundary curves (no conformal map available)
// ---------------------------------------------------------------------------

struct NamedCurve {
  std::string name;
  int rotation_order;  // p such that the curve is invariant under 2 pi / p
  std::function<cplx(double)> b;
};

inline const std::vector<NamedCurve>& builtin_curves() {
  static const std::vector<NamedCurve> curves = {
      {"fig5_left", 4,
       [](double x) {
         return (2.0 + std::cos(8.0 * kPi * x)) * std::polar(1.0, kTwoPi * x);
       }},
      {"fig5_right", 3,
       [](double x) {
         const double c = std::cos(6.0 * kPi * x);
         return std::polar(1.0, kTwoPi * (x + c / 8.0)) / (1.5 + 0.25 * c);
       }},
  };
  return curves;
}

inline const NamedCurve& find_curve(const std::string& name) {
  for (const NamedCurve& c : builtin_curves())
    if (c.name == name) return c;
  throw argument_error("unknown curve '" + name + "'");
}

// The six polynomial example domains whose boundaries the gallery exports.
inline std::vector<ConformalMap> gallery_maps() {
  auto poly = [](std::vector<cplx> cs, const char* label) {
    return polynomial_map({0.0, 0.0}, std::move(cs), label);
  };
  const cplx z{0.0, 0.0}, one{1.0, 0.0}, i{0.0, 1.0};
  std::vector<cplx> c23(23, z);
  c23[0] = {50.0, 0.0};
  c23[3] = {1.0, 1.0};
  c23[22] = one;
  return {
      identity_map(),
      poly({{40.0, 0.0}, z, z, one}, "poly_40z_z4"),
      poly({{40.0, 0.0}, z, z, z, z, z, one}, "poly_40z_z7"),
      poly(std::move(c23), "poly_50z_1iz4_z23"),
      poly({{20.0, 0.0}, z, z, {1.0, 2.0}, z, z, one}, "poly_20z_12iz4_z7"),
      poly({{19.0, 0.0}, z, z, z, z, z, i, z, z, one}, "poly_19z_iz7_z10"),
  };
}

// ---------------------------------------------------------------------------
// domain JSON schema: {"kind", "x0": [re,im], "coeffs": [[re,im],...],
//                      "n", "label", "injectivity_override"}
// ---------------------------------------------------------------------------

inline cplx parse_complex(const json& j) {
  if (!j.is_array() || j.size() != 2)
    throw argument_error("complex numbers serialize as [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json complex_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline ConformalMap parse_domain(const json& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw argument_error("domain spec must be an object with a 'kind' field");
  const std::string kind = j.at("kind").get<std::string>();
  const std::string label = j.value("label", std::string{});
  if (kind == "identity") {
    ConformalMap m = identity_map();
    if (!label.empty()) m.label = label;
    return m;
  }
  if (kind == "polynomial") {
    cplx x0{0.0, 0.0};
    if (j.contains("x0")) x0 = parse_complex(j.at("x0"));
    std::vector<cplx> coeffs;
    for (const json& c : j.at("coeffs")) coeffs.push_back(parse_complex(c));
    return polynomial_map(x0, std::move(coeffs), label, j.value("injectivity_override", false));
  }
  if (kind == "regular_polygon") {
    ConformalMap m = sc_regular_polygon(j.at("n").get<int>());
    if (!label.empty()) m.label = label;
    return m;
  }
  throw argument_error("unknown domain kind '" + kind + "'");
}

inline json serialize_domain(const ConformalMap& m) {
  json j;
  switch (m.kind) {
    case MapKind::Identity:
      j["kind"] = "identity";
      break;
    case MapKind::Polynomial: {
      j["kind"] = "polynomial";
      j["x0"] = complex_to_json(m.offset);
      json cs = json::array();
      for (cplx c : m.coeffs) cs.push_back(complex_to_json(c));
      j["coeffs"] = std::move(cs);
      j["injectivity_override"] = m.injectivity_override;
      break;
    }
    case MapKind::RegularPolygon:
      j["kind"] = "regular_polygon";
      j["n"] = m.sides;
      break;
  }
  j["label"] = m.label;
  return j;
}

// ---------------------------------------------------------------------------
// experiment configuration
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {
      "stationary_scan", "classify",   "single_vortex",  "point_vortices",
      "blob_confinement", "exit_sweep", "unstable_sweep", "lemdev_scan",
      "boundary_export",  "rotation_check"};
  return names;
}

struct ExperimentConfig {
  std::string experiment;
  std::vector<ConformalMap> domains;
  std::vector<std::string> curves;
  // numeric block
  double dt = 1e-3;
  double horizon = 10.0;
  double horizon_exponent = 0.0;  // if > 0, per-epsilon horizon = eps^-exponent
  long record_every = 1;
  int n_particles = 1;
  std::vector<double> epsilons;  // sweep values; also lemdev deltas
  double beta = 0.45;
  std::uint64_t rng_seed = 1;
  std::vector<double> tail_radii;
  int samples = 512;
  int rotation_order = 0;
  double total_mass = 1.0;
  cplx z0{0.0, 0.0};
  std::string profile = "uniform_disk";
  std::vector<std::array<double, 3>> vortices;  // x, y, mass
  // output block
  std::string output_prefix = "out";
  std::string format = "csv";
};

inline json to_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = c.experiment;
  json doms = json::array();
  for (const ConformalMap& m : c.domains) doms.push_back(serialize_domain(m));
  j["domains"] = std::move(doms);
  j["curves"] = c.curves;
  json num;
  num["dt"] = c.dt;
  num["horizon"] = c.horizon;
  num["horizon_exponent"] = c.horizon_exponent;
  num["record_every"] = c.record_every;
  num["n_particles"] = c.n_particles;
  num["epsilons"] = c.epsilons;
  num["beta"] = c.beta;
  num["rng_seed"] = c.rng_seed;
  num["tail_radii"] = c.tail_radii;
  num["samples"] = c.samples;
  num["rotation_order"] = c.rotation_order;
  num["total_mass"] = c.total_mass;
  num["z0"] = complex_to_json(c.z0);
  num["profile"] = c.profile;
  json vs = json::array();
  for (const auto& v : c.vortices) vs.push_back(json::array({v[0], v[1], v[2]}));
  num["vortices"] = std::move(vs);
  j["numeric"] = std::move(num);
  json out;
  out["prefix"] = c.output_prefix;
  out["format"] = c.format;
  j["output"] = std::move(out);
  return j;
}

inline std::string serialize(const ExperimentConfig& c) { return to_json(c).dump(2) + "\n"; }

inline ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  c.experiment = j.at("experiment").get<std::string>();
  if (j.contains("domains"))
    for (const json& d : j.at("domains")) c.domains.push_back(parse_domain(d));
  if (j.contains("curves")) c.curves = j.at("curves").get<std::vector<std::string>>();
  if (j.contains("numeric")) {
    const json& n = j.at("numeric");
    c.dt = n.value("dt", c.dt);
    c.horizon = n.value("horizon", c.horizon);
    c.horizon_exponent = n.value("horizon_exponent", c.horizon_exponent);
    c.record_every = n.value("record_every", c.record_every);
    c.n_particles = n.value("n_particles", c.n_particles);
    if (n.contains("epsilons")) c.epsilons = n.at("epsilons").get<std::vector<double>>();
    c.beta = n.value("beta", c.beta);
    c.rng_seed = n.value("rng_seed", c.rng_seed);
    if (n.contains("tail_radii")) c.tail_radii = n.at("tail_radii").get<std::vector<double>>();
    c.samples = n.value("samples", c.samples);
    c.rotation_order = n.value("rotation_order", c.rotation_order);
    c.total_mass = n.value("total_mass", c.total_mass);
    if (n.contains("z0")) c.z0 = parse_complex(n.at("z0"));
    c.profile = n.value("profile", c.profile);
    if (n.contains("vortices"))
      for (const json& v : n.at("vortices"))
        c.vortices.push_back({v[0].get<double>(), v[1].get<double>(), v[2].get<double>()});
  }
  if (j.contains("output")) {
    const json& o = j.at("output");
    c.output_prefix = o.value("prefix", c.output_prefix);
    c.format = o.value("format", c.format);
  }
  return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
  return parse_config(json::parse(text));
}

inline void validate(const ExperimentConfig& c) {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), c.experiment) == names.end())
    throw argument_error("unknown experiment '" + c.experiment + "'");
  if (!(c.dt > 0.0)) throw argument_error("dt must be positive");
  if (c.record_every < 1) throw argument_error("record_every must be >= 1");
  if (c.format != "csv" && c.format != "jsonl")
    throw argument_error("output format must be 'csv' or 'jsonl'");
  for (const std::string& name : c.curves) find_curve(name);  // throws if unknown
  const bool sweep = c.experiment == "exit_sweep" || c.experiment == "unstable_sweep" ||
                     c.experiment == "lemdev_scan";
  if (sweep) {
    if (c.epsilons.empty()) throw argument_error("sweep requires a nonempty epsilon list");
    for (std::size_t i = 1; i < c.epsilons.size(); ++i)
      if (!(c.epsilons[i] < c.epsilons[i - 1]))
        throw argument_error("sweep epsilons must be strictly decreasing");
  }
  const bool confinement = c.experiment == "blob_confinement" || c.experiment == "exit_sweep";
  if (confinement) {
    if (c.epsilons.empty()) throw argument_error("confinement experiment requires epsilons");
    if (!(c.beta > 0.0 && c.beta < 0.5))
      throw argument_error("confinement experiments require 0 < beta < 1/2");
    if (c.n_particles < 1) throw argument_error("n_particles must be >= 1");
    if (c.profile != "uniform_disk" && c.profile != "gaussian_truncated")
      throw argument_error("profile must be 'uniform_disk' or 'gaussian_truncated'");
  }
  const bool single_domain = c.experiment == "stationary_scan" || c.experiment == "classify" ||
                             c.experiment == "single_vortex" || c.experiment == "point_vortices" ||
                             c.experiment == "blob_confinement" || c.experiment == "exit_sweep" ||
                             c.experiment == "lemdev_scan";
  if (single_domain && c.domains.size() != 1)
    throw argument_error("experiment '" + c.experiment + "' requires exactly one domain");
  if (c.experiment == "point_vortices" && c.vortices.empty())
    throw argument_error("point_vortices requires a nonempty vortex list");
  if (c.experiment == "boundary_export" && c.domains.empty() && c.curves.empty())
    throw argument_error("boundary_export requires at least one domain or curve");
  if (c.experiment == "boundary_export" && c.samples < 3)
    throw argument_error("boundary_export requires samples >= 3");
  if (c.experiment == "rotation_check") {
    if (c.rotation_order < 3) throw argument_error("rotation_order must be >= 3");
    if (c.samples < c.rotation_order || c.samples % c.rotation_order != 0)
      throw argument_error("samples must be a positive multiple of rotation_order");
    if (c.domains.empty() && c.curves.empty())
      throw argument_error("rotation_check requires at least one domain or curve");
  }
  if (c.experiment == "lemdev_scan" && c.samples < 1)
    throw argument_error("lemdev_scan requires samples >= 1");
}

// ---------------------------------------------------------------------------
// boundary sampling
// ---------------------------------------------------------------------------

// Closed polyline of M+1 points f(e^{2 pi i k / M}), k = 0..M.
inline std::vector<cplx> sample_boundary(const ConformalMap& map, int M) {
  std::vector<cplx> pts;
  pts.reserve(std::size_t(M) + 1);
  for (int k = 0; k < M; ++k)
    pts.push_back(eval(map, std::polar(1.0, kTwoPi * double(k) / double(M))));
  pts.push_back(pts.front());
  return pts;
}

// M points b(k/M), k = 0..M-1 (b is 1-periodic, so the curve closes itself).
inline std::vector<cplx> sample_curve(const std::function<cplx(double)>& b, int M) {
  std::vector<cplx> pts;
  pts.reserve(std::size_t(M));
  for (int k = 0; k < M; ++k) pts.push_back(b(double(k) / double(M)));
  return pts;
}

namespace detail {

inline double orient(cplx a, cplx b, cplx c) {
  return (b.real() - a.real()) * (c.imag() - a.imag()) -
         (b.imag() - a.imag()) * (c.real() - a.real());
}

inline bool segments_cross(cplx a, cplx b, cplx c, cplx d) {
  const double o1 = orient(a, b, c), o2 = orient(a, b, d);
  const double o3 = orient(c, d, a), o4 = orient(c, d, b);
  return ((o1 > 0.0) != (o2 > 0.0)) && ((o3 > 0.0) != (o4 > 0.0));
}

}  // namespace detail

// True iff the closed polyline (last point repeats the first) has no pair of
// non-adjacent crossing segments.
inline bool polyline_is_simple(const std::vector<cplx>& pts) {
  if (pts.size() < 4) return true;
  const std::size_t n = pts.size() - 1;  // segment count for a closed polyline
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;  // adjacent through the wrap
      if (detail::segments_cross(pts[i], pts[i + 1], pts[j], pts[j + 1])) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// output plumbing
// ---------------------------------------------------------------------------

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open '" + tmp + "' for writing");
    f << content;
    if (!f.good()) throw std::runtime_error("write to '" + tmp + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

inline std::string sanitize_label(const std::string& label, const std::string& fallback) {
  std::string s;
  for (char ch : label) s += (std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_');
  return s.empty() ? fallback : s;
}

// CSV preamble: version string and a single-line config echo as # comments.
inline std::string csv_preamble(const ExperimentConfig& cfg) {
  return std::string("# ") + kVersion + "\n# config " + to_json(cfg).dump() + "\n";
}

inline json report_to_json(const StationaryReport& r) {
  json j;
  j["location"] = complex_to_json(r.location);
  j["disk_preimage"] = complex_to_json(r.disk_preimage);
  j["mu2"] = r.mu2;
  j["p"] = r.p;
  j["q"] = r.q;
  j["lambda_plus"] = r.lambda_plus;
  j["lambda_minus"] = r.lambda_minus;
  j["class"] = to_string(r.cls);
  j["residual"] = r.residual;
  return j;
}

inline json fit_to_json(const LawFit& f) {
  json j;
  j["kind"] = f.kind == LawKind::Power ? "power" : "log";
  j["slope"] = f.slope;
  j["intercept"] = f.intercept;
  j["r_squared"] = f.r_squared;
  json pts = json::array();
  for (auto [x, y] : f.points) pts.push_back(json::array({x, y}));
  j["points"] = std::move(pts);
  return j;
}

inline json exit_result_to_json(const ExitTimeResult& r) {
  json j;
  j["epsilon"] = r.epsilon;
  j["beta"] = r.beta;
  j["tau"] = r.tau;
  j["horizon_reached"] = r.horizon_reached;
  j["horizon"] = r.horizon;
  j["steps"] = r.steps;
  j["dt"] = r.dt;
  j["domain_label"] = r.domain_label;
  return j;
}

struct RunOptions {
  std::optional<std::string> output_prefix;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

namespace detail {

inline json wrap_report(const ExperimentConfig& cfg, json body) {
  json j;
  j["version"] = kVersion;
  j["config"] = to_json(cfg);
  j["result"] = std::move(body);
  return j;
}

// JSON-lines output: first line carries version + config echo, then entries.
inline std::string jsonl_document(const ExperimentConfig& cfg, const std::vector<json>& entries) {
  std::string out = json{{"version", kVersion}, {"config", to_json(cfg)}}.dump() + "\n";
  for (const json& e : entries) out += e.dump() + "\n";
  return out;
}

inline std::string diagnostics_csv(const ExperimentConfig& cfg,
                                   const std::vector<DiagnosticsRecord>& recs) {
  std::string out = csv_preamble(cfg);
  out += "t,Bx,By,I,R,H,m4,m8";
  for (std::size_t k = 0; k < cfg.tail_radii.size(); ++k)
    out += ",tail_r" + std::to_string(k + 1);
  out += "\n";
  for (const DiagnosticsRecord& r : recs) {
    out += format_real(r.t) + "," + format_real(r.B.real()) + "," + format_real(r.B.imag()) + "," +
           format_real(r.I) + "," + format_real(r.R) + "," + format_real(r.H) + "," +
           format_real(r.m4) + "," + format_real(r.m8);
    for (const auto& [rr, m] : r.tail_mass) out += "," + format_real(m);
    out += "\n";
  }
  return out;
}

inline double sweep_horizon(const ExperimentConfig& cfg, double eps) {
  return cfg.horizon_exponent > 0.0 ? std::pow(eps, -cfg.horizon_exponent) : cfg.horizon;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// experiment dispatch
// ---------------------------------------------------------------------------

// Runs the configured experiment, writes its artifacts atomically, and prints
// a one-line JSON summary to stdout. Returns the process exit code:
// 0 success, 2 validation error, 3 physical event, 4 internal error.
inline int run(ExperimentConfig cfg, const RunOptions& opt = {}) {
  try {
    if (opt.output_prefix) cfg.output_prefix = *opt.output_prefix;
    if (opt.seed) cfg.rng_seed = *opt.seed;
    validate(cfg);
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}, {"kind", "validation"}}.dump() << "\n";
    return 2;
  }
  const std::string& prefix = cfg.output_prefix;
  json summary;
  summary["version"] = kVersion;
  summary["experiment"] = cfg.experiment;
  std::vector<std::string> outputs;
  int code = 0;
  try {
    if (cfg.experiment == "stationary_scan" || cfg.experiment == "classify") {
      const DomainModel dom = make_domain(cfg.domains[0]);
      auto reports = find_stationary_points(dom);
      if (cfg.experiment == "classify") {
        // keep only the point nearest the image of the disk center
        std::sort(reports.begin(), reports.end(),
                  [&](const StationaryReport& a, const StationaryReport& b) {
                    return std::abs(a.location - dom.x0) < std::abs(b.location - dom.x0);
                  });
        reports.resize(1);
      }
      json body = json::array();
      for (const StationaryReport& r : reports) body.push_back(report_to_json(r));
      const std::string path = prefix + "_" + cfg.experiment + ".json";
      atomic_write(path, detail::wrap_report(cfg, body).dump(2) + "\n");
      outputs.push_back(path);
      summary["points"] = body;
    } else if (cfg.experiment == "single_vortex") {
      const DomainModel dom = make_domain(cfg.domains[0]);
      const auto traj = simulate_single_vortex(dom, cfg.z0, cfg.dt, cfg.horizon, cfg.record_every);
      std::string out = csv_preamble(cfg) + "t,x,y,robin\n";
      for (const TrajectorySample& s : traj)
        out += format_real(s.t) + "," + format_real(s.z.real()) + "," + format_real(s.z.imag()) +
               "," + format_real(s.robin_value) + "\n";
      const std::string path = prefix + "_trajectory.csv";
      atomic_write(path, out);
      outputs.push_back(path);
      summary["samples"] = traj.size();
      summary["final_position"] = complex_to_json(traj.back().z);
    } else if (cfg.experiment == "point_vortices") {
      const DomainModel dom = make_domain(cfg.domains[0]);
      VortexSystem sys;
      for (const auto& v : cfg.vortices) {
        sys.positions.push_back({v[0], v[1]});
        sys.masses.push_back(v[2]);
      }
      std::string out = csv_preamble(cfg) + "t,H";
      for (std::size_t i = 0; i < sys.positions.size(); ++i)
        out += ",x" + std::to_string(i + 1) + ",y" + std::to_string(i + 1);
      out += "\n";
      auto record = [&](const VortexSystem& s) {
        out += format_real(s.time) + "," + format_real(hamiltonian(dom, s.positions, s.masses));
        for (cplx z : s.positions)
          out += "," + format_real(z.real()) + "," + format_real(z.imag());
        out += "\n";
      };
      record(sys);
      const long nsteps = long(std::ceil(cfg.horizon / cfg.dt - 1e-9));
      for (long s = 0; s < nsteps; ++s) {
        sys = step_point_vortices(dom, sys, cfg.dt, opt.threads);
        if ((s + 1) % cfg.record_every == 0 || s + 1 == nsteps) record(sys);
      }
      const std::string path = prefix + "_vortices.csv";
      atomic_write(path, out);
      outputs.push_back(path);
      summary["steps"] = nsteps;
    } else if (cfg.experiment == "blob_confinement") {
      const DomainModel dom = make_domain(cfg.domains[0]);
      const double eps = cfg.epsilons[0];
      const double horizon = detail::sweep_horizon(cfg, eps);
      const BlobProfile prof = cfg.profile == "uniform_disk" ? BlobProfile::UniformDisk
                                                             : BlobProfile::GaussianTruncated;
      const BlobState blob0 =
          init_blob(dom, dom.x0, eps, cfg.beta, cfg.n_particles, cfg.total_mass, prof, cfg.rng_seed);
      std::vector<DiagnosticsRecord> recs;
      json event;
      ExitTimeResult res;
      try {
        res = measure_exit_time(
            dom, blob0, cfg.dt, horizon, opt.threads,
            [&](const BlobState& b) { recs.push_back(diagnostics(dom, b, cfg.tail_radii)); },
            cfg.record_every);
      } catch (const physics_event& e) {
        event = json{{"event", e.what()}, {"time", e.time}};
        code = 3;
      }
      const std::string csv_path = prefix + "_diagnostics.csv";
      atomic_write(csv_path, detail::diagnostics_csv(cfg, recs));
      outputs.push_back(csv_path);
      json body = event.is_null() ? exit_result_to_json(res) : event;
      const std::string path = prefix + "_result.json";
      atomic_write(path, detail::wrap_report(cfg, body).dump(2) + "\n");
      outputs.push_back(path);
      summary["result"] = body;
    } else if (cfg.experiment == "exit_sweep") {
      const DomainModel dom = make_domain(cfg.domains[0]);
      const BlobProfile prof = cfg.profile == "uniform_disk" ? BlobProfile::UniformDisk
                                                             : BlobProfile::GaussianTruncated;
      std::vector<json> entries;
      std::vector<std::pair<double, double>> usable;
      for (double eps : cfg.epsilons) {
        const BlobState blob0 = init_blob(dom, dom.x0, eps, cfg.beta, cfg.n_particles,
                                          cfg.total_mass, prof, cfg.rng_seed);
        try {
          const ExitTimeResult r =
              measure_exit_time(dom, blob0, cfg.dt, detail::sweep_horizon(cfg, eps), opt.threads);
          entries.push_back(exit_result_to_json(r));
          if (!r.horizon_reached) usable.emplace_back(eps, r.tau);
        } catch (const physics_event& e) {
          entries.push_back(json{{"epsilon", eps}, {"event", e.what()}, {"time", e.time}});
          code = 3;
        }
      }
      if (usable.size() >= 3) entries.push_back(json{{"fit", fit_to_json(fit_power_law(usable))}});
      const std::string path = prefix + "_sweep.jsonl";
      atomic_write(path, detail::jsonl_document(cfg, entries));
      outputs.push_back(path);
      summary["entries"] = long(entries.size());
    } else if (cfg.experiment == "unstable_sweep") {
      std::vector<ConformalMap> family =
          cfg.domains.empty() ? default_peanut_family() : cfg.domains;
      const auto found = locate_unstable_example(family);
      if (!found) throw domain_error("no unstable point in family");
      const DomainModel dom = make_domain(found->map, found->report.disk_preimage);
      const auto exits = unstable_exit_experiment(dom, cfg.epsilons, cfg.beta, cfg.dt, cfg.horizon);
      std::vector<json> entries;
      entries.push_back(json{{"unstable_point", report_to_json(found->report)},
                             {"domain", serialize_domain(found->map)}});
      std::vector<std::pair<double, double>> usable;
      for (const UnstableExit& e : exits) {
        entries.push_back(json{{"epsilon", e.epsilon},
                               {"tau", e.tau},
                               {"horizon_reached", e.horizon_reached}});
        if (!e.horizon_reached) usable.emplace_back(e.epsilon, e.tau);
      }
      json fit;
      if (usable.size() >= 3) {
        fit = fit_to_json(fit_log_law(usable));
        entries.push_back(json{{"fit", fit}});
      }
      const std::string path = prefix + "_unstable.jsonl";
      atomic_write(path, detail::jsonl_document(cfg, entries));
      outputs.push_back(path);
      summary["unstable_point"] = report_to_json(found->report);
      if (!fit.is_null()) summary["fit"] = fit;
    } else if (cfg.experiment == "lemdev_scan") {
      const DomainModel dom = make_domain(cfg.domains[0]);
      std::vector<json> entries;
      for (double delta : cfg.epsilons) {
        const LemdevResult r = lemdev_ratio(dom, delta, cfg.samples, cfg.rng_seed);
        entries.push_back(json{{"delta", delta},
                               {"sup_ratio", r.sup_ratio},
                               {"limit_coeff", complex_to_json(r.limit_coeff)},
                               {"target", complex_to_json(dom.t3 / (6.0 * kPi * dom.t1))}});
      }
      const std::string path = prefix + "_lemdev.jsonl";
      atomic_write(path, detail::jsonl_document(cfg, entries));
      outputs.push_back(path);
      summary["entries"] = long(entries.size());
    } else if (cfg.experiment == "boundary_export") {
      json items = json::array();
      int idx = 0;
      auto emit = [&](const std::string& label, const std::vector<cplx>& pts) {
        std::string out = csv_preamble(cfg) + "k,x,y\n";
        for (std::size_t k = 0; k < pts.size(); ++k)
          out += std::to_string(k) + "," + format_real(pts[k].real()) + "," +
                 format_real(pts[k].imag()) + "\n";
        const std::string path = prefix + "_" + label + ".csv";
        atomic_write(path, out);
        outputs.push_back(path);
        items.push_back(json{{"label", label},
                             {"file", path},
                             {"points", pts.size()},
                             {"simple", polyline_is_simple(pts)}});
      };
      for (const ConformalMap& m : cfg.domains) {
        emit(sanitize_label(m.label, "domain" + std::to_string(idx++)),
             sample_boundary(m, cfg.samples));
      }
      for (const std::string& name : cfg.curves) {
        auto pts = sample_curve(find_curve(name).b, cfg.samples);
        pts.push_back(pts.front());  // close the polyline for export
        emit(name, pts);
      }
      summary["boundaries"] = items;
    } else if (cfg.experiment == "rotation_check") {
      json items = json::array();
      int idx = 0;
      for (const ConformalMap& m : cfg.domains) {
        const DomainModel dom = make_domain(m);
        std::vector<cplx> pts;
        for (int k = 0; k < cfg.samples; ++k)
          pts.push_back(eval(m, std::polar(1.0, kTwoPi * double(k) / double(cfg.samples))) -
                        dom.x0);
        items.push_back(json{{"label", sanitize_label(m.label, "domain" + std::to_string(idx++))},
                             {"p", cfg.rotation_order},
                             {"invariant", check_rotation_invariance(pts, cfg.rotation_order)}});
      }
      for (const std::string& name : cfg.curves) {
        const auto pts = sample_curve(find_curve(name).b, cfg.samples);
        items.push_back(json{{"label", name},
                             {"p", cfg.rotation_order},
                             {"invariant", check_rotation_invariance(pts, cfg.rotation_order)}});
      }
      const std::string path = prefix + "_rotation.json";
      atomic_write(path, detail::wrap_report(cfg, items).dump(2) + "\n");
      outputs.push_back(path);
      summary["checks"] = items;
    }
  } catch (const physics_event& e) {
    summary["event"] = e.what();
    summary["event_time"] = e.time;
    code = 3;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}, {"kind", "internal"}}.dump() << "\n";
    return 4;
  }
  summary["status"] = code == 0 ? "ok" : "physical_event";
  summary["outputs"] = outputs;
  std::cout << summary.dump() << "\n";
  return code;
}

// ---------------------------------------------------------------------------
// presets
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {
      "disk-orbit",          "fig2-boundaries", "fig5-curves",
      "thm-power-confinement", "unstable-log-exit", "lemdev-rate"};
  return names;
}

inline ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  if (name == "disk-orbit") {
    // circular-orbit oracle: vortex at radius 1/2 in the disk, one period 3 pi^2
    c.experiment = "single_vortex";
    c.domains = {identity_map()};
    c.z0 = {0.5, 0.0};
    c.dt = 1e-3;
    c.horizon = 3.0 * kPi * kPi;
    c.record_every = 100;
    c.output_prefix = "disk_orbit";
  } else if (name == "fig2-boundaries") {
    c.experiment = "boundary_export";
    c.domains = {identity_map(),
                 polynomial_map({0.0, 0.0}, {{40.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}},
                                "poly_40z_z4")};
    c.samples = 512;
    c.output_prefix = "fig2";
  } else if (name == "fig5-curves") {
    c.experiment = "boundary_export";
    c.curves = {"fig5_left", "fig5_right"};
    c.samples = 400;
    c.output_prefix = "fig5";
  } else if (name == "thm-power-confinement") {
    c.experiment = "blob_confinement";
    c.domains = {polynomial_map({0.0, 0.0}, {{40.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}},
                                "poly_40z_z4")};
    c.epsilons = {0.05};
    c.beta = 0.45;
    c.n_particles = 200;
    c.dt = 2e-3;
    c.horizon_exponent = 0.6;
    c.record_every = 50;
    c.tail_radii = {0.05, 0.1, 0.2};
    c.rng_seed = 7;
    c.output_prefix = "confinement";
  } else if (name == "unstable-log-exit") {
    c.experiment = "unstable_sweep";
    c.domains = default_peanut_family();
    c.epsilons = {1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
    c.beta = 0.5;
    c.dt = 1e-3;
    c.horizon = 200.0;
    c.output_prefix = "unstable_exit";
    c.format = "jsonl";
  } else if (name == "lemdev-rate") {
    c.experiment = "lemdev_scan";
    c.domains = {polynomial_map({0.0, 0.0}, {{1.0, 0.0}, {0.0, 0.0}, {0.1, 0.0}}, "poly_z_01z3")};
    c.epsilons = {0.2, 0.1, 0.05, 0.025};
    c.samples = 2000;
    c.rng_seed = 1234;
    c.output_prefix = "lemdev";
    c.format = "jsonl";
  } else {
    std::string msg = "unknown preset '" + name + "'; available:";
    for (const std::string& p : preset_names()) msg += " " + p;
    throw argument_error(msg);
  }
  return c;
}

// Dotted-path config override, e.g. "numeric.dt=0.001" or
// "output.prefix=run1"; values parse as JSON when possible, else as strings.
inline void apply_override(json& cfg, const std::string& key, const std::string& value) {
  json* node = &cfg;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dotpos = key.find('.', start);
    const std::string part = key.substr(start, dotpos - start);
    if (part.empty()) throw argument_error("bad override path '" + key + "'");
    if (dotpos == std::string::npos) {
      json parsed = json::parse(value, nullptr, false);
      (*node)[part] = parsed.is_discarded() ? json(value) : parsed;
      return;
    }
    node = &(*node)[part];
    start = dotpos + 1;
  }
}

}  // namespace vortexlab::harness
