#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "spear/federation.hpp"
#include "spear/hyper.hpp"
#include "spear/model.hpp"
#include "spear/optim.hpp"
#include "spear/tasks.hpp"

namespace spear {

struct CorpusConfig {
  std::string family = "copy";  // "copy" | "mcq"
  int count = 400;              // task pool partitioned across clients
  int eval_count = 100;         // held-out tasks
  CopyCorpusOptions copy;
  McqCorpusOptions mcq;
};

// Starting point of the global model. "zeros" is the uniform model;
// "pretrain" runs supervised NLL steps on a disjoint corpus first, standing in
// for a pretrained base model. With tail_noise > 0 the last answer token of
// that many pretraining examples is replaced by its successor in the content
// alphabet, which leaves the base model confidently wrong near the end of
// completions.
struct InitConfig {
  std::string kind = "zeros";
  int pretrain_tasks = 0;
  int pretrain_steps = 0;
  double pretrain_lr = 0.05;
  double tail_noise = 0.0;
};

struct OutputConfig {
  bool checkpoints = false;  // params_round_<t>.bin
  bool traces = false;       // traces.jsonl
  bool corpus = false;       // corpus.jsonl
};

struct RunConfig {
  ModelSpec model;
  SpearHyper spear;
  InteractionConfig interaction;
  OptimConfig optim;
  FedConfig federation;
  CorpusConfig tasks;
  InitConfig init;
  OutputConfig outputs;

  void validate() const;
};

// Config problem tied to a JSON path such as "federation.rounds". `line` is
// 0 when unknown.
class ConfigError : public InputError {
 public:
  ConfigError(std::string path, const std::string& message, int line = 0);
  const std::string& path() const { return path_; }
  int line() const { return line_; }

 private:
  std::string path_;
  int line_;
};

RunConfig parse_run_config(const nlohmann::json& j);
nlohmann::ordered_json to_json(const RunConfig& cfg);

// Reads and validates a config file. Syntax errors and field errors carry the
// line they were found on when it can be located.
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json load_config_json(const std::filesystem::path& path);

// Applies "a.b.c=value" to a config document; value is parsed as JSON and
// falls back to a plain string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

}  // namespace spear
