#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace spear::cli {

// Exit codes shared by every subcommand.
inline constexpr int kOk = 0;
inline constexpr int kRuntimeFailure = 1;
inline constexpr int kBadInput = 2;

struct RunArgs {
  std::filesystem::path config;
  std::filesystem::path out_dir;
  std::vector<std::string> overrides;  // "section.field=value"
  int workers = 1;
};

// Writes metrics.jsonl, summary.csv, manifest.json (and optional checkpoints,
// traces, corpus) under out_dir.
int cmd_run(const RunArgs& args);

struct SweepArgs {
  RunArgs base;
  std::string axis;  // mu | tau | lambda_l | N
  std::vector<std::string> values;
};

// One sub-run per value under out_dir/<axis>_<value>/, plus ablation.csv.
int cmd_sweep(const SweepArgs& args);

struct VerifyArgs {
  int instances = 1000;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
  int workers = 1;
  bool corrupt_h = false;  // drop the log 4 plateau; the audit must fail
};

// Randomized theorem audit plus the lemma grid; writes theorem_audit.csv.
int cmd_verify_theorem(const VerifyArgs& args);

const char* version_string();

}  // namespace spear::cli
