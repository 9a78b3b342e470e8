// maxent-lab: solve, validate and run experiment configs.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "maxent_lab.hpp"

#ifndef MAXENT_LAB_FIXTURE_DIR
#define MAXENT_LAB_FIXTURE_DIR "fixtures"
#endif

namespace fs = std::filesystem;
using namespace maxent_lab;

namespace {

enum Exit { ok = 0, other = 1, invalid = 2, guard = 3 };

fs::path fixture_dir() {
  if (const char* env = std::getenv("MAXENT_LAB_FIXTURES")) return env;
  return MAXENT_LAB_FIXTURE_DIR;
}

// Parses and validates; prints diagnostics to stderr. Returns nullopt on any error.
std::optional<RunConfig> load(const std::string& path, bool quiet_warnings = false) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return std::nullopt;
  }
  std::vector<Diagnostic> diags;
  auto cfg = parse_config_text(text, diags);
  diags = validate_config(cfg, std::move(diags));
  bool failed = false;
  for (const auto& d : diags) {
    failed |= d.severity == Diagnostic::Severity::error;
    if (d.severity == Diagnostic::Severity::error || !quiet_warnings) std::cerr << path << ": " << d.format() << "\n";
  }
  if (failed) return std::nullopt;
  return cfg;
}

int run(const std::string& path, std::string out_dir, const std::string& mode) {
  auto cfg = load(path);
  if (!cfg) return invalid;
  if (out_dir.empty()) out_dir = cfg->output_dir;
  if (out_dir.empty()) out_dir = "out/" + fs::path(path).stem().string();
  std::optional<ArithmeticMode> override_mode;
  if (mode == "float") override_mode = ArithmeticMode::float64;
  else if (mode == "rational") override_mode = ArithmeticMode::rational;
  try {
    auto manifest = run_config(*cfg, path, out_dir, override_mode);
    for (const auto& e : manifest.experiments)
      std::printf("%-24s %8.3f s  %s\n", e.tag.c_str(), e.seconds,
                  e.files.empty() ? "" : (out_dir + "/" + e.files.front()).c_str());
    std::printf("wrote %s/summary.md and %s/manifest.json\n", out_dir.c_str(), out_dir.c_str());
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return e.is_guard() ? guard : other;
  }
  return ok;
}

int solve(const std::string& path) {
  auto cfg = load(path, true);
  if (!cfg) return invalid;
  try {
    auto problem = build_problem(cfg->problem);
    auto sol = solve_maxent(problem.space, problem.constraint);
    std::printf("%-12s %-22s %-22s\n", "outcome", "prior", "maxent");
    for (std::size_t x = 0; x < problem.space.size(); ++x)
      std::printf("%-12s %-22.17g %-22.17g\n", problem.space.labels[x].c_str(), problem.space.prior_mass[x],
                  sol.pmf[x]);
    for (Eigen::Index j = 0; j < sol.beta.size(); ++j) std::printf("beta[%td] = %.17g\n", j, sol.beta[j]);
    std::printf("ln Z = %.17g\nentropy_bits = %.17g\niterations = %d\n", sol.log_partition, sol.entropy_bits,
                sol.iterations);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return e.is_guard() ? guard : other;
  }
  return ok;
}

std::vector<fs::path> fixtures() {
  std::vector<fs::path> out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(fixture_dir(), ec))
    if (entry.path().extension() == ".json") out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Maximum-entropy lattice experiments"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config, out_dir, mode, fixture;

  auto* run_cmd = app.add_subcommand("run", "run every experiment in a config");
  run_cmd->add_option("-c,--config", config, "config file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("-o,--output", out_dir, "output directory (overrides output_dir)");
  run_cmd->add_option("--mode", mode, "arithmetic mode override")->check(CLI::IsMember({"float", "rational"}));

  auto* validate_cmd = app.add_subcommand("validate", "check a config without writing outputs");
  validate_cmd->add_option("-c,--config", config, "config file")->required();

  auto* solve_cmd = app.add_subcommand("solve", "solve the MaxEnt problem of a config and print masses");
  solve_cmd->add_option("-c,--config", config, "config file")->required()->check(CLI::ExistingFile);

  auto* fixtures_cmd = app.add_subcommand("fixtures", "shipped example configs");
  fixtures_cmd->require_subcommand(1);
  auto* list_cmd = fixtures_cmd->add_subcommand("list", "list shipped fixtures");
  auto* frun_cmd = fixtures_cmd->add_subcommand("run", "run a shipped fixture");
  frun_cmd->add_option("name", fixture, "fixture name")->required();
  frun_cmd->add_option("-o,--output", out_dir, "output directory");
  frun_cmd->add_option("--mode", mode, "arithmetic mode override")->check(CLI::IsMember({"float", "rational"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : invalid;
  }

  try {
    if (*run_cmd) return run(config, out_dir, mode);
    if (*solve_cmd) return solve(config);
    if (*validate_cmd) {
      auto cfg = load(config);
      if (!cfg) return invalid;
      std::printf("%s: ok\n", config.c_str());
      return ok;
    }
    if (*list_cmd) {
      for (const auto& f : fixtures()) {
        std::string name = "?";
        std::vector<Diagnostic> diags;
        try {
          name = parse_config_text(read_file(f.string()), diags).name;
        } catch (const Error&) {
        }
        std::printf("%-20s %s\n", f.stem().string().c_str(), name.c_str());
      }
      return ok;
    }
    if (*frun_cmd) {
      const fs::path path = fixture_dir() / (fixture + ".json");
      if (!fs::exists(path)) {
        std::cerr << "unknown fixture '" << fixture << "' (see 'maxent-lab fixtures list')\n";
        return invalid;
      }
      return run(path.string(), out_dir.empty() ? "out/" + fixture : out_dir, mode);
    }
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return other;
  }
  return other;
}
