// fedtick command-line driver: single runs, schedule sweeps, theory
// self-verification, and the preset table.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedtick/fedtick.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string preset;
  std::string schedule;
  long long rounds = -1;
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON experiment config");
  cmd->add_option("--preset", flags.preset,
                  "named preset (sent140, femnist, cifar100, shakespeare)");
  cmd->add_option("--schedule", flags.schedule,
                  "schedule rule: dsgd, fixed, k-rounds, k-error, k-step, eta-rounds, "
                  "eta-error, eta-step");
  cmd->add_option("--rounds", flags.rounds, "communication rounds");
  cmd->add_option("--seed", flags.seeds, "seed (repeatable)");
  cmd->add_option("--out", flags.out_dir, "output directory");
}

fedtick::ExperimentConfig resolve(const CommonFlags& flags) {
  fedtick::ExperimentConfig cfg;
  if (!flags.config_path.empty()) cfg = fedtick::load_config(flags.config_path);
  if (!flags.preset.empty()) {
    const auto p = fedtick::find_preset(flags.preset);
    if (!p) throw fedtick::ConfigError("unknown preset '" + flags.preset + "'");
    cfg.preset = p->name;
    cfg.runtime = p->runtime;
    cfg.schedule.k0 = p->k0;
    cfg.schedule.eta0 = p->eta0;
    cfg.rounds = 10000;
    if (auto* q = std::get_if<fedtick::QuadraticFederationSpec>(&cfg.federation))
      q->c_total = p->c_total;
  }
  if (!flags.schedule.empty()) {
    const auto kind = fedtick::parse_schedule_kind(flags.schedule);
    if (!kind) throw fedtick::ConfigError("unknown schedule '" + flags.schedule + "'");
    cfg.schedule.kind = *kind;
  }
  if (flags.rounds > 0) cfg.rounds = flags.rounds;
  if (!flags.seeds.empty()) cfg.seeds = flags.seeds;
  if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
  return cfg;
}

void print_result(const fedtick::ExperimentResult& result) {
  for (const auto& f : result.per_seed_files) std::printf("wrote %s\n", f.c_str());
  std::printf("wrote %s\n", result.mean_file.c_str());
  std::printf("wrote %s\n", result.snapshot_file.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fedtick: a deterministic federated-averaging simulator with decaying "
               "local-step and learning-rate schedules"};
  app.require_subcommand(1);

  CommonFlags run_flags, sweep_flags;
  CLI::App* run = app.add_subcommand("run", "run one schedule, one CSV per seed plus the mean");
  add_common(run, run_flags);
  CLI::App* sweep =
      app.add_subcommand("sweep", "run all eight schedule rules under the shared config");
  add_common(sweep, sweep_flags);

  int samples = 1000;
  std::uint64_t verify_seed = 1;
  std::string report_path;
  CLI::App* verify = app.add_subcommand(
      "verify-theory", "check the optimum formulas and bound against brute-force oracles");
  verify->add_option("--samples", samples, "randomized inputs to test");
  verify->add_option("--seed", verify_seed, "rng seed");
  verify->add_option("--out", report_path, "also write the JSON report here");

  CLI::App* presets_cmd = app.add_subcommand("presets", "list the built-in presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      print_result(fedtick::run_experiment(resolve(run_flags)));
    } else if (sweep->parsed()) {
      for (const auto& result : fedtick::run_sweep(resolve(sweep_flags))) print_result(result);
    } else if (verify->parsed()) {
      const fedtick::TheoryReport report = fedtick::verify_theory(samples, verify_seed);
      const std::string text = fedtick::to_json(report).dump(2);
      std::printf("%s\n", text.c_str());
      if (!report_path.empty()) {
        std::ofstream out(report_path);
        out << text << "\n";
      }
      return report.pass() ? 0 : 1;
    } else if (presets_cmd->parsed()) {
      std::printf("%-12s %8s %8s %8s %10s %10s %6s %6s %8s %8s\n", "name", "mbits", "down", "up",
                  "beta_s", "beta_std", "N", "C", "K0", "eta0");
      for (const auto& p : fedtick::presets())
        std::printf("%-12s %8.2f %8.1f %8.1f %10.4f %10.2g %6d %6d %8d %8.3g\n", p.name.c_str(),
                    p.runtime.model_megabits, p.runtime.down_mbps, p.runtime.up_mbps,
                    p.runtime.beta_seconds, p.beta_std_seconds, p.runtime.n_participants,
                    p.c_total, p.k0, p.eta0);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
