#include "spear/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace spear {

namespace {

using nlohmann::json;

// Walks one JSON object, remembers which keys were read, and rejects the
// rest so typos do not silently fall back to defaults.
class Section {
 public:
  Section(const json& parent, const std::string& key, const std::string& prefix, bool required)
      : path_(prefix.empty() ? key : prefix + "." + key) {
    if (!parent.contains(key)) {
      if (required) throw ConfigError(path_, "missing required section");
      return;
    }
    node_ = &parent.at(key);
    if (!node_->is_object()) throw ConfigError(path_, "expected an object");
  }

  template <typename T>
  void get(const std::string& key, T& out, bool required = false) {
    seen_.insert(key);
    const std::string p = path_ + "." + key;
    if (!node_ || !node_->contains(key)) {
      if (required) throw ConfigError(p, "missing required field '" + p + "'");
      return;
    }
    try {
      out = node_->at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(p, std::string("wrong type: ") + e.what());
    }
  }

  void finish() const {
    if (!node_) return;
    for (const auto& [k, v] : node_->items()) {
      if (!seen_.count(k)) throw ConfigError(path_ + "." + k, "unknown field '" + path_ + "." + k + "'");
    }
  }

 private:
  std::string path_;
  const json* node_ = nullptr;
  std::set<std::string> seen_;
};

// Validation errors name a field by message only; map the message back to a
// path for diagnostics.
template <typename F>
void validated(const std::string& path, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const InputError& e) {
    throw ConfigError(path, e.what());
  }
}

int find_line(const std::string& text, const std::string& path) {
  // Search for each path component in order, so "federation.rounds" finds the
  // "rounds" key after the "federation" key.
  std::size_t pos = 0;
  std::stringstream ss(path);
  std::string part;
  bool found = false;
  while (std::getline(ss, part, '.')) {
    const auto at = text.find('"' + part + '"', pos);
    if (at == std::string::npos) break;
    pos = at;
    found = true;
  }
  if (!found) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
}

}  // namespace

ConfigError::ConfigError(std::string path, const std::string& message, int line)
    : InputError(line > 0 ? "config line " + std::to_string(line) + ": " + path + ": " + message
                          : "config: " + path + ": " + message),
      path_(std::move(path)),
      line_(line) {}

void RunConfig::validate() const {
  validated("model", [&] { model.validate(); });
  validated("spear", [&] { spear.validate(); });
  validated("interaction", [&] { interaction.validate(); });
  validated("optim", [&] { optim.validate(); });
  validated("federation", [&] { federation.validate(); });
  if (tasks.family != "copy" && tasks.family != "mcq") {
    throw ConfigError("tasks.family", "must be \"copy\" or \"mcq\"");
  }
  if (tasks.count < federation.num_clients) {
    throw ConfigError("tasks.count", "task pool smaller than num_clients");
  }
  if (tasks.eval_count < 1) throw ConfigError("tasks.eval_count", "must be >= 1");
  if (tasks.family == "copy") {
    const int needed = 2 * tasks.copy.payload_max + 3;  // prompt and answer jointly
    if (tasks.copy.payload_min < 1 || tasks.copy.payload_max < tasks.copy.payload_min) {
      throw ConfigError("tasks.payload_min", "payload range must satisfy 1 <= min <= max");
    }
    if (needed > model.max_seq_len) {
      throw ConfigError("model.max_seq_len", "too short for prompt and answer");
    }
    if (interaction.max_completion_len < tasks.copy.payload_max + 1) {
      throw ConfigError("interaction.max_completion_len", "shorter than the longest answer");
    }
  } else if (tasks.mcq.num_options < 2 || tasks.mcq.num_options > 8) {
    throw ConfigError("tasks.num_options", "must lie in [2, 8]");
  }
  if (init.kind != "zeros" && init.kind != "pretrain") {
    throw ConfigError("init.kind", "must be \"zeros\" or \"pretrain\"");
  }
  if (init.kind == "pretrain" && (init.pretrain_tasks < 1 || init.pretrain_steps < 0 || !(init.pretrain_lr > 0.0))) {
    throw ConfigError("init", "pretrain needs pretrain_tasks >= 1, pretrain_steps >= 0, pretrain_lr > 0");
  }
  if (!(init.tail_noise >= 0.0 && init.tail_noise <= 1.0)) {
    throw ConfigError("init.tail_noise", "must lie in [0, 1]");
  }
}

RunConfig parse_run_config(const json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  static const std::set<std::string> kSections = {"model", "spear", "interaction", "optim",
                                                  "federation", "tasks", "init", "outputs"};
  for (const auto& [k, v] : j.items()) {
    if (!kSections.count(k)) throw ConfigError(k, "unknown section '" + k + "'");
  }
  RunConfig c;
  {
    Section s(j, "model", "", true);
    s.get("vocab_size", c.model.vocab.size, true);
    s.get("order", c.model.order, true);
    s.get("max_seq_len", c.model.max_seq_len);
    s.finish();
  }
  {
    Section s(j, "spear", "", false);
    s.get("lambda_w", c.spear.lambda_w);
    s.get("lambda_l", c.spear.lambda_l);
    s.get("mu", c.spear.mu);
    s.get("tau", c.spear.tau);
    s.get("N", c.spear.max_revisions);
    s.get("temperature", c.spear.temperature);
    s.get("numeric_floor", c.spear.numeric_floor);
    s.finish();
  }
  {
    Section s(j, "interaction", "", false);
    s.get("hint_ratio", c.interaction.hint_ratio);
    s.get("max_completion_len", c.interaction.max_completion_len);
    s.finish();
  }
  {
    Section s(j, "optim", "", false);
    s.get("base_lr", c.optim.base_lr);
    s.get("min_lr", c.optim.min_lr);
    s.get("warmup_ratio", c.optim.warmup_ratio);
    s.get("beta1", c.optim.beta1);
    s.get("beta2", c.optim.beta2);
    s.get("weight_decay", c.optim.weight_decay);
    s.get("epsilon", c.optim.epsilon);
    s.get("persist_state", c.optim.persist_state);
    s.finish();
  }
  {
    Section s(j, "federation", "", true);
    s.get("num_clients", c.federation.num_clients, true);
    s.get("clients_per_round", c.federation.clients_per_round, true);
    s.get("rounds", c.federation.rounds, true);
    s.get("local_steps", c.federation.local_steps, true);
    s.get("prompts_per_round", c.federation.prompts_per_round, true);
    s.get("dirichlet_alpha", c.federation.dirichlet_alpha);
    s.get("seed", c.federation.seed);
    s.finish();
  }
  {
    Section s(j, "tasks", "", true);
    s.get("family", c.tasks.family, true);
    s.get("count", c.tasks.count);
    s.get("eval_count", c.tasks.eval_count);
    s.get("payload_min", c.tasks.copy.payload_min);
    s.get("payload_max", c.tasks.copy.payload_max);
    s.get("alphabet", c.tasks.copy.alphabet);
    s.get("num_options", c.tasks.mcq.num_options);
    s.get("num_categories", c.tasks.mcq.num_categories);
    s.finish();
  }
  {
    Section s(j, "init", "", false);
    s.get("kind", c.init.kind);
    s.get("pretrain_tasks", c.init.pretrain_tasks);
    s.get("pretrain_steps", c.init.pretrain_steps);
    s.get("pretrain_lr", c.init.pretrain_lr);
    s.get("tail_noise", c.init.tail_noise);
    s.finish();
  }
  {
    Section s(j, "outputs", "", false);
    s.get("checkpoints", c.outputs.checkpoints);
    s.get("traces", c.outputs.traces);
    s.get("corpus", c.outputs.corpus);
    s.finish();
  }
  c.validate();
  return c;
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["model"] = {{"vocab_size", c.model.vocab.size},
                {"order", c.model.order},
                {"max_seq_len", c.model.max_seq_len}};
  j["spear"] = {{"lambda_w", c.spear.lambda_w},
                {"lambda_l", c.spear.lambda_l},
                {"mu", c.spear.mu},
                {"tau", c.spear.tau},
                {"N", c.spear.max_revisions},
                {"temperature", c.spear.temperature},
                {"numeric_floor", c.spear.numeric_floor}};
  j["interaction"] = {{"hint_ratio", c.interaction.hint_ratio},
                      {"max_completion_len", c.interaction.max_completion_len}};
  j["optim"] = {{"base_lr", c.optim.base_lr},
                {"min_lr", c.optim.min_lr},
                {"warmup_ratio", c.optim.warmup_ratio},
                {"beta1", c.optim.beta1},
                {"beta2", c.optim.beta2},
                {"weight_decay", c.optim.weight_decay},
                {"epsilon", c.optim.epsilon},
                {"persist_state", c.optim.persist_state}};
  j["federation"] = {{"num_clients", c.federation.num_clients},
                     {"clients_per_round", c.federation.clients_per_round},
                     {"rounds", c.federation.rounds},
                     {"local_steps", c.federation.local_steps},
                     {"prompts_per_round", c.federation.prompts_per_round},
                     {"dirichlet_alpha", c.federation.dirichlet_alpha},
                     {"seed", c.federation.seed}};
  j["tasks"] = {{"family", c.tasks.family},
                {"count", c.tasks.count},
                {"eval_count", c.tasks.eval_count},
                {"payload_min", c.tasks.copy.payload_min},
                {"payload_max", c.tasks.copy.payload_max},
                {"alphabet", c.tasks.copy.alphabet},
                {"num_options", c.tasks.mcq.num_options},
                {"num_categories", c.tasks.mcq.num_categories}};
  j["init"] = {{"kind", c.init.kind},
               {"pretrain_tasks", c.init.pretrain_tasks},
               {"pretrain_steps", c.init.pretrain_steps},
               {"pretrain_lr", c.init.pretrain_lr},
               {"tail_noise", c.init.tail_noise}};
  j["outputs"] = {{"checkpoints", c.outputs.checkpoints},
                  {"traces", c.outputs.traces},
                  {"corpus", c.outputs.corpus}};
  return j;
}

json load_config_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    // nlohmann reports "line L, column C" inside e.what().
    throw ConfigError("<syntax>", e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const auto doc = load_config_json(path);
  try {
    return parse_run_config(doc);
  } catch (const ConfigError& e) {
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    const int line = find_line(buf.str(), e.path());
    if (line == 0) throw;
    const std::string prefix = "config: " + e.path() + ": ";
    std::string msg = e.what();
    if (msg.rfind(prefix, 0) == 0) msg = msg.substr(prefix.size());
    throw ConfigError(e.path(), msg, line);
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(assignment, "override must look like section.field=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  std::string pointer = "/";
  for (char ch : key) pointer += ch == '.' ? '/' : ch;
  doc[json::json_pointer(pointer)] = value;
}

}  // namespace spear
