#include "spear/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "spear/config.hpp"
#include "spear/margin.hpp"
#include "spear/run.hpp"

#ifndef SPEAR_VERSION
#define SPEAR_VERSION "unknown"
#endif

namespace spear::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Config file, or a manifest.json from an earlier run, plus overrides.
RunConfig resolve_config(const fs::path& path, const std::vector<std::string>& overrides) {
  json doc = load_config_json(path);
  bool edited = false;
  if (doc.is_object() && doc.contains("resolved_config")) {
    doc = json(doc.at("resolved_config"));
    edited = true;
  }
  if (const char* env = std::getenv("SPEAR_SEED"); env && *env) {
    try {
      doc["federation"]["seed"] = std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError("SPEAR_SEED", std::string("not an unsigned integer: ") + env);
    }
    edited = true;
  }
  for (const auto& o : overrides) apply_override(doc, o);
  edited = edited || !overrides.empty();
  // Untouched files go through the loader so diagnostics carry line numbers.
  return edited ? parse_run_config(doc) : load_run_config(path);
}

struct RunOutcome {
  double initial_accuracy = 0.0;
  double final_accuracy = 0.0;
};

RunOutcome execute(const RunConfig& cfg, const fs::path& config_path, const fs::path& out_dir,
                   int workers) {
  fs::create_directories(out_dir);
  const std::string started = utc_now();

  std::ofstream metrics(out_dir / "metrics.jsonl", std::ios::trunc);
  std::ofstream summary(out_dir / "summary.csv", std::ios::trunc);
  if (!metrics || !summary) throw std::runtime_error("cannot write into " + out_dir.string());
  summary << kSummaryHeader << '\n';
  if (cfg.outputs.traces) std::ofstream(out_dir / "traces.jsonl", std::ios::trunc);
  if (cfg.outputs.corpus) write_corpus_jsonl(make_corpora(cfg).pool, out_dir / "corpus.jsonl");

  RunOptions opts;
  opts.workers = workers;
  opts.on_round = [&](const RoundRecord& rec, const ParamVector& global,
                      std::span<const ClientUpdate> updates) {
    metrics << to_json(rec).dump() << '\n';
    summary << summary_row(rec) << '\n';
    if (cfg.outputs.checkpoints) {
      save_params(global, out_dir / ("params_round_" + std::to_string(rec.round) + ".bin"));
    }
    if (cfg.outputs.traces) {
      for (const auto& u : updates) write_traces_jsonl(u.traces, out_dir / "traces.jsonl", true);
    }
  };
  const auto run = run_federated(cfg, opts);
  metrics.flush();
  summary.flush();

  ordered_json manifest;
  manifest["version"] = version_string();
  manifest["config_path"] = fs::absolute(config_path).string();
  manifest["output_dir"] = fs::absolute(out_dir).string();
  manifest["started_utc"] = started;
  manifest["finished_utc"] = utc_now();
  manifest["workers"] = workers;
  manifest["initial_accuracy"] = run.initial_accuracy;
  manifest["final_accuracy"] = run.history.empty() ? run.initial_accuracy : run.history.back().accuracy;
  manifest["resolved_config"] = to_json(cfg);
  std::ofstream(out_dir / "manifest.json") << manifest.dump(2) << '\n';

  return {run.initial_accuracy,
          run.history.empty() ? run.initial_accuracy : run.history.back().accuracy};
}

}  // namespace

const char* version_string() { return SPEAR_VERSION; }

int cmd_run(const RunArgs& args) {
  RunConfig cfg;
  try {
    cfg = resolve_config(args.config, args.overrides);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  }
  try {
    const auto out = execute(cfg, args.config, args.out_dir, args.workers);
    std::cout << "initial accuracy " << out.initial_accuracy << ", final accuracy "
              << out.final_accuracy << '\n';
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
}

int cmd_sweep(const SweepArgs& args) {
  static const char* kAxes[] = {"mu", "tau", "lambda_l", "N"};
  if (std::find(std::begin(kAxes), std::end(kAxes), args.axis) == std::end(kAxes)) {
    std::cerr << "error: sweep axis must be one of mu, tau, lambda_l, N\n";
    return kBadInput;
  }
  if (args.values.empty()) {
    std::cerr << "error: sweep needs at least one value\n";
    return kBadInput;
  }

  std::vector<RunConfig> configs;
  for (const auto& v : args.values) {
    auto overrides = args.base.overrides;
    overrides.push_back("spear." + args.axis + "=" + v);
    try {
      configs.push_back(resolve_config(args.base.config, overrides));
    } catch (const std::exception& e) {
      std::cerr << "error: " << args.axis << "=" << v << ": " << e.what() << '\n';
      return kBadInput;
    }
  }

  try {
    fs::create_directories(args.base.out_dir);
    std::ofstream table(args.base.out_dir / "ablation.csv", std::ios::trunc);
    table << "axis,value,initial_accuracy,final_accuracy\n";
    for (std::size_t i = 0; i < configs.size(); ++i) {
      const auto sub = args.base.out_dir / (args.axis + "_" + args.values[i]);
      const auto out = execute(configs[i], args.base.config, sub, args.base.workers);
      table << args.axis << ',' << args.values[i] << ',' << out.initial_accuracy << ','
            << out.final_accuracy << '\n';
      std::cout << args.axis << "=" << args.values[i] << " final accuracy " << out.final_accuracy << '\n';
    }
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
}

int cmd_verify_theorem(const VerifyArgs& args) {
  if (args.instances < 1) {
    std::cerr << "error: --instances must be >= 1\n";
    return kBadInput;
  }
  try {
    const MarginConstant h = args.corrupt_h ? MarginConstant(h_mu_without_plateau) : MarginConstant(h_mu);
    const auto lemma = audit_lemma_grid(h);
    const auto audit = audit_theorem(args.instances, args.seed, h, args.workers);

    fs::create_directories(args.out_dir);
    std::ofstream csv(args.out_dir / "theorem_audit.csv", std::ios::trunc);
    csv << "instance_id,epsilon,margin,rhs,slack,alpha,mu,tau,lambda_w,lambda_l,win_len,tail_size,order,rejected\n";
    char buf[512];
    for (const auto& inst : audit.instances) {
      const auto& r = inst.report;
      std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.17g,%g,%g,%d,%.17g,%.17g,%d,%d,%d,%lld",
                    static_cast<long long>(inst.id), r.epsilon, r.margin, r.bound_rhs, r.slack, r.alpha,
                    r.mu, r.tau, r.lambda_w, r.lambda_l, r.win_len, r.tail_size, inst.order,
                    static_cast<long long>(inst.rejected));
      csv << buf << '\n';
    }

    std::cout << "lemma grid: " << lemma.points << " points, " << lemma.violations
              << " violations, worst slack " << lemma.worst_slack << " at mu=" << lemma.worst_mu
              << " p=" << lemma.worst_p << '\n';
    std::cout << "theorem audit: " << audit.instances.size() << " instances, " << audit.violations
              << " violations, worst slack " << audit.worst_slack << '\n';
    if (lemma.violations > 0 || audit.violations > 0) {
      std::cerr << "FAILED: worst slack "
                << std::min(lemma.worst_slack, audit.worst_slack) << '\n';
      return kRuntimeFailure;
    }
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
}

}  // namespace spear::cli
