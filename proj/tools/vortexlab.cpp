#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vortexlab/harness.hpp"

namespace {

using vortexlab::harness::json;

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int fail_validation(const std::string& msg) {
  std::cerr << json{{"error", msg}, {"kind", "validation"}}.dump() << "\n";
  return 2;
}

std::pair<std::string, std::string> split_kv(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0)
    throw vortexlab::argument_error("override must look like key=value, got '" + kv + "'");
  return {kv.substr(0, eq), kv.substr(eq + 1)};
}

}  // namespace

int main(int argc, char** argv) {
  namespace harness = vortexlab::harness;

  CLI::App app{"vortexlab: point-vortex and vortex-blob experiments in conformal domains"};
  app.set_version_flag("--version", std::string(harness::kVersion));
  app.require_subcommand(1);

  // vortexlab run <config> [--config PATH] [--output-prefix P] [--seed S]
  //               [--threads N] [--override key=value]...
  auto* cmd_run = app.add_subcommand("run", "run an experiment from a JSON config");
  std::string run_config_pos, run_config_flag, run_prefix;
  std::optional<std::uint64_t> run_seed;
  int run_threads = 1;
  std::vector<std::string> run_overrides;
  cmd_run->add_option("config-path", run_config_pos, "config file path");
  cmd_run->add_option("--config", run_config_flag, "config file path");
  cmd_run->add_option("--output-prefix", run_prefix, "override the output path prefix");
  cmd_run->add_option("--seed", run_seed, "override the RNG seed");
  cmd_run->add_option("--threads", run_threads, "worker threads (affects wall time only)");
  cmd_run->add_option("--override", run_overrides, "dotted-path config override, key=value");

  // vortexlab preset <name> [key=value]...
  auto* cmd_preset = app.add_subcommand("preset", "emit (or run) a named preset config");
  std::string preset_name;
  std::vector<std::string> preset_overrides;
  bool preset_run = false;
  cmd_preset->add_option("name", preset_name, "preset name")->required();
  cmd_preset->add_option("overrides", preset_overrides, "dotted-path overrides, key=value");
  cmd_preset->add_flag("--run", preset_run, "run the preset instead of printing it");

  // vortexlab boundary <domain.json> --samples M
  auto* cmd_boundary = app.add_subcommand("boundary", "export a domain boundary polyline");
  std::string boundary_domain, boundary_prefix = "boundary";
  int boundary_samples = 512;
  cmd_boundary->add_option("domain", boundary_domain, "domain spec JSON file")->required();
  cmd_boundary->add_option("--samples", boundary_samples, "number of boundary samples");
  cmd_boundary->add_option("--output-prefix", boundary_prefix, "output path prefix");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_run) {
      const std::string path = !run_config_flag.empty() ? run_config_flag : run_config_pos;
      if (path.empty()) return fail_validation("run requires a config path");
      json raw;
      try {
        raw = json::parse(slurp(path));
        for (const std::string& kv : run_overrides) {
          auto [k, v] = split_kv(kv);
          harness::apply_override(raw, k, v);
        }
      } catch (const std::exception& e) {
        return fail_validation(e.what());
      }
      harness::ExperimentConfig cfg;
      try {
        cfg = harness::parse_config(raw);
      } catch (const std::exception& e) {
        return fail_validation(e.what());
      }
      harness::RunOptions opt;
      if (!run_prefix.empty()) opt.output_prefix = run_prefix;
      if (run_seed) opt.seed = *run_seed;
      opt.threads = run_threads;
      return harness::run(cfg, opt);
    }
    if (*cmd_preset) {
      json raw;
      try {
        raw = harness::to_json(harness::preset(preset_name));
        for (const std::string& kv : preset_overrides) {
          auto [k, v] = split_kv(kv);
          harness::apply_override(raw, k, v);
        }
      } catch (const std::exception& e) {
        return fail_validation(e.what());
      }
      harness::ExperimentConfig cfg;
      try {
        cfg = harness::parse_config(raw);
        harness::validate(cfg);
      } catch (const std::exception& e) {
        return fail_validation(e.what());
      }
      if (preset_run) return harness::run(cfg);
      std::cout << harness::serialize(cfg);
      return 0;
    }
    if (*cmd_boundary) {
      harness::ExperimentConfig cfg;
      cfg.experiment = "boundary_export";
      cfg.samples = boundary_samples;
      cfg.output_prefix = boundary_prefix;
      try {
        cfg.domains = {harness::parse_domain(json::parse(slurp(boundary_domain)))};
        harness::validate(cfg);
      } catch (const std::exception& e) {
        return fail_validation(e.what());
      }
      return harness::run(cfg);
    }
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}, {"kind", "internal"}}.dump() << "\n";
    return 4;
  }
  return 2;
}
