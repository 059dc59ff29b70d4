#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "spear/cli.hpp"

namespace {

int default_workers() {
  const auto n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated self-play fine-tuning simulator"};
  app.set_version_flag("--version", spear::cli::version_string());
  app.require_subcommand(1);

  spear::cli::RunArgs run_args;
  run_args.workers = default_workers();
  auto* run = app.add_subcommand("run", "Run one federated experiment");
  run->add_option("-c,--config", run_args.config, "Run config (JSON) or a manifest.json")->required();
  run->add_option("-o,--out", run_args.out_dir, "Output directory")->required();
  run->add_option("--set", run_args.overrides, "Override a config field, e.g. --set spear.mu=0.5");
  run->add_option("-w,--workers", run_args.workers, "Client worker threads")->check(CLI::PositiveNumber);

  spear::cli::SweepArgs sweep_args;
  sweep_args.base.workers = default_workers();
  auto* sweep = app.add_subcommand("sweep", "Ablate one hyperparameter");
  sweep->add_option("-c,--config", sweep_args.base.config, "Base run config")->required();
  sweep->add_option("-o,--out", sweep_args.base.out_dir, "Output directory")->required();
  sweep->add_option("--axis", sweep_args.axis, "mu | tau | lambda_l | N")->required();
  sweep->add_option("--values", sweep_args.values, "Values to sweep")->delimiter(',');
  sweep->add_option("--set", sweep_args.base.overrides, "Override a config field");
  sweep->add_option("-w,--workers", sweep_args.base.workers, "Client worker threads")
      ->check(CLI::PositiveNumber);

  spear::cli::VerifyArgs verify_args;
  verify_args.workers = default_workers();
  auto* verify = app.add_subcommand("verify-theorem", "Audit the margin theorem and its lemma");
  verify->add_option("-n,--instances", verify_args.instances, "Random win/lose pairs")
      ->capture_default_str();
  verify->add_option("-s,--seed", verify_args.seed, "Audit seed")->capture_default_str();
  verify->add_option("-o,--out", verify_args.out_dir, "Output directory")->required();
  verify->add_option("-w,--workers", verify_args.workers, "Worker threads")->check(CLI::PositiveNumber);
  verify->add_flag("--test-corrupt-h", verify_args.corrupt_h,
                   "Use h(mu) without its log 4 plateau (mutation check; must fail)")
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : spear::cli::kBadInput;
  }

  if (*run) return spear::cli::cmd_run(run_args);
  if (*sweep) return spear::cli::cmd_sweep(sweep_args);
  if (*verify) {
    if (const char* env = std::getenv("SPEAR_SEED"); env && *env && verify->count("--seed") == 0) {
      verify_args.seed = std::strtoull(env, nullptr, 10);
    }
    return spear::cli::cmd_verify_theorem(verify_args);
  }
  return spear::cli::kBadInput;
}
