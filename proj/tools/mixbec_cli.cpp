#include <cstdio>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "mixbec/error.hpp"
#include "mixbec/harness.hpp"

namespace fs = std::filesystem;
using namespace mixbec;

namespace {

struct Flags {
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1;
};

ExperimentConfig load(const std::string& path, const Flags& flags) {
  auto config = load_config(path);
  if (!flags.out.empty()) config.out_dir = flags.out;
  if (flags.seed_set) config.seed = flags.seed;
  return config;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
}

int cmd_sweep(const std::string& path, const Flags& flags) {
  const auto config = load(path, flags);
  const auto report = run_convergence_sweep(config, flags.threads);
  const auto files = emit_report(report, config, config.out_dir);
  int failed = 0;
  std::printf("%-8s %-10s %-24s %-24s %s\n", "entry", "dim", "alpha(t*)", "energy gap", "status");
  for (const auto& e : report.entries) {
    char name[32];
    std::snprintf(name, sizeof name, "(%d,%d)", e.entry.n1, e.entry.n2);
    std::printf("%-8s %-10zu %-24.17g %-24.17g %s\n", name, e.dimension, e.alpha_probe, e.energy_gap(),
                e.ok ? "ok" : e.message.c_str());
    failed += e.ok ? 0 : 1;
  }
  std::printf("fit exponent of alpha(t*) vs N1+N2: %.17g\n", report.fit_exponent);
  for (const auto& f : files) std::printf("wrote %s\n", f.c_str());
  return failed ? 2 : 0;
}

int cmd_effective(const std::string& path, const Flags& flags) {
  const auto config = load(path, flags);
  const auto traj = run_effective(config);
  ensure_dir(config.out_dir);
  const std::string out = (fs::path(config.out_dir) / "trajectory.csv").string();
  write_trajectory_csv(out, traj);
  const auto& m0 = traj.masses.front();
  const auto& m1 = traj.masses.back();
  double drift = 0.0;
  for (std::size_t c = 0; c < m0.size(); ++c) drift += m1[c] - m0[c];
  std::printf("mode %s, %zu samples to t = %.6g\n", to_string(config.effective).c_str(), traj.times.size(),
              traj.times.back());
  std::printf("total mass drift %.3e, energy drift %.3e\n", drift, traj.energy.back() - traj.energy.front());
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

int cmd_scattering(const std::string& path, const Flags& flags) {
  const auto config = load(path, flags);
  ScatteringResult base;
  const auto rows = run_scattering(config, &base);
  ensure_dir(config.out_dir);
  const std::string table = (fs::path(config.out_dir) / "scattering.csv").string();
  const std::string profile = (fs::path(config.out_dir) / "profile.csv").string();
  write_scattering_csv(table, rows);
  write_profile_csv(profile, base);
  std::printf("a = %.17g for %s\n", base.scattering_length, config.scattering.potential.describe().c_str());
  int failed = 0;
  for (const auto& r : rows) {
    if (!r.message.empty()) {
      std::printf("N = %g: %s\n", r.particles, r.message.c_str());
      ++failed;
      continue;
    }
    std::printf("N = %g: a_N = %.17g, N^beta a_N = %.17g, C = %.17g, residual = %.3e\n", r.particles,
                r.scattering_length, r.scattering_length * std::pow(r.particles, config.scattering.beta),
                r.shell_ratio, r.residual);
  }
  std::printf("wrote %s\nwrote %s\n", table.c_str(), profile.c_str());
  return failed ? 2 : 0;
}

int cmd_check(const Flags& flags) {
  const auto results = run_invariant_suite(flags.seed);
  int failed = 0;
  for (const auto& r : results) {
    std::printf("%s %s: %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    failed += r.passed ? 0 : 1;
  }
  std::printf("%zu checks, %d failed\n", results.size(), failed);
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-species condensate laboratory"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kVersion);

  Flags flags;
  app.add_option("--out", flags.out, "Output directory (overrides [output] dir)");
  app.add_option_function<std::uint64_t>(
      "--seed",
      [&](std::uint64_t s) {
        flags.seed = s;
        flags.seed_set = true;
      },
      "Seed for randomized suites");
  app.add_option("--threads", flags.threads, "Worker threads for ladder entries")->check(CLI::PositiveNumber);

  std::string config;
  auto* sweep = app.add_subcommand("sweep", "Many-body convergence sweep over the particle-number ladder");
  sweep->add_option("config", config, "Config file")->required()->check(CLI::ExistingFile);
  auto* effective = app.add_subcommand("effective", "Evolve the effective equations");
  effective->add_option("config", config, "Config file")->required()->check(CLI::ExistingFile);
  auto* scattering = app.add_subcommand("scattering", "Scattering lengths and shell calibration");
  scattering->add_option("config", config, "Config file")->required()->check(CLI::ExistingFile);
  app.add_subcommand("check", "Run the invariant suite");
  CLI11_PARSE(app, argc, argv);

  try {
    if (*sweep) return cmd_sweep(config, flags);
    if (*effective) return cmd_effective(config, flags);
    if (*scattering) return cmd_scattering(config, flags);
    return cmd_check(flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error at " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
