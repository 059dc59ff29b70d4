#include "spear/run.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <thread>

namespace spear {

namespace {

std::vector<Task> make_tasks(const RunConfig& cfg, int count, std::uint64_t stream) {
  const auto seed = derive_seed({cfg.federation.seed, stream});
  if (cfg.tasks.family == "mcq") return gen_mcq_tasks(count, cfg.tasks.mcq, cfg.model.vocab, seed);
  return gen_copy_tasks(count, cfg.tasks.copy, cfg.model.vocab, seed);
}

void renumber(std::vector<Task>& tasks, std::int64_t base) {
  for (std::size_t i = 0; i < tasks.size(); ++i) tasks[i].task_id = base + static_cast<std::int64_t>(i);
}

// Dispatches fn(i) for i in [0, n) over `workers` threads. Each index is
// handled by exactly one thread and writes only its own slot.
template <typename F>
void parallel_for(std::size_t n, int workers, F&& fn) {
  const auto w = static_cast<std::size_t>(std::max(1, workers));
  if (w == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < std::min(w, n); ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += w) fn(i);
    });
  }
}

}  // namespace

Corpora make_corpora(const RunConfig& cfg) {
  Corpora c;
  c.pool = make_tasks(cfg, cfg.tasks.count, 1);
  c.eval = make_tasks(cfg, cfg.tasks.eval_count, 2);
  renumber(c.eval, 1'000'000);
  if (cfg.init.kind == "pretrain") {
    c.pretrain = make_tasks(cfg, cfg.init.pretrain_tasks, 3);
    renumber(c.pretrain, 2'000'000);
  }
  return c;
}

ParamVector initial_params(const RunConfig& cfg, const Corpora& corpora) {
  ParamVector params(cfg.model.param_dim());
  if (cfg.init.kind != "pretrain" || corpora.pretrain.empty() || cfg.init.pretrain_steps == 0) {
    return params;
  }
  TraceSets sft;
  const auto& vocab = cfg.model.vocab;
  auto alphabet = vocab.content_tokens();
  if (cfg.tasks.family == "copy" && cfg.tasks.copy.alphabet > 0 &&
      static_cast<std::size_t>(cfg.tasks.copy.alphabet) < alphabet.size()) {
    alphabet.resize(static_cast<std::size_t>(cfg.tasks.copy.alphabet));
  }
  std::mt19937_64 rng(derive_seed({cfg.federation.seed, 4}));
  std::bernoulli_distribution corrupt(cfg.init.tail_noise);
  for (const auto& t : corpora.pretrain) {
    TokenSeq answer = t.answer;
    if (answer.size() >= 2 && corrupt(rng)) {
      auto& last = answer[answer.size() - 2];  // final token before EOS
      const auto it = std::find(alphabet.begin(), alphabet.end(), last);
      if (it != alphabet.end()) {
        last = alphabet[static_cast<std::size_t>(it - alphabet.begin() + 1) % alphabet.size()];
      }
    }
    sft.wins.push_back({t.prompt, std::move(answer)});
  }
  SpearHyper h = cfg.spear;
  h.lambda_w = 1.0;
  h.lambda_l = 0.0;
  OptimConfig oc = cfg.optim;
  oc.base_lr = cfg.init.pretrain_lr;
  oc.min_lr = cfg.init.pretrain_lr;
  oc.warmup_ratio = 0.0;
  oc.weight_decay = 0.0;
  auto state = OptimState::fresh(oc, params.size(), cfg.init.pretrain_steps);
  ParamVector grad(params.size());
  for (int s = 0; s < cfg.init.pretrain_steps; ++s) {
    loss_and_grad_spear(cfg.model, params, sft, h, grad);
    step_inplace(state, params, grad, false);
  }
  return params;
}

FederatedRun run_federated(const RunConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  const auto corpora = make_corpora(cfg);
  const auto& fed = cfg.federation;
  auto shards = partition_dirichlet(corpora.pool, fed.num_clients, fed.dirichlet_alpha, fed.seed);

  std::vector<ClientState> clients(static_cast<std::size_t>(fed.num_clients));
  for (int k = 0; k < fed.num_clients; ++k) {
    clients[static_cast<std::size_t>(k)].client_id = k;
    clients[static_cast<std::size_t>(k)].shard = std::move(shards[static_cast<std::size_t>(k)]);
  }

  const LocalContext local{cfg.model, cfg.spear, cfg.interaction, cfg.optim, fed,
                           default_oracle(cfg.model.vocab, cfg.interaction.hint_ratio)};
  const int eval_len = cfg.interaction.max_completion_len;

  FederatedRun run;
  ParamVector global = initial_params(cfg, corpora);
  run.initial_accuracy = evaluate_accuracy(cfg.model, global, corpora.eval, eval_len);
  double acc = run.initial_accuracy;

  for (int t = 0; t < fed.rounds; ++t) {
    RoundRecord rec;
    rec.round = t;
    rec.selected = select_clients(fed.num_clients, fed.clients_per_round, fed.seed, t);
    rec.accuracy_before = acc;

    std::vector<ClientUpdate> updates(rec.selected.size());
    parallel_for(updates.size(), opts.workers, [&](std::size_t i) {
      auto& client = clients[static_cast<std::size_t>(rec.selected[i])];
      updates[i] = local_round(client, global, local, t);
    });

    global = aggregate(updates, global);
    acc = evaluate_accuracy(cfg.model, global, corpora.eval, eval_len);
    rec.accuracy = acc;

    rec.stats = InteractionStats(cfg.spear.max_revisions);
    for (const auto& u : updates) {
      rec.win_counts.push_back(u.win_count);
      rec.lose_counts.push_back(static_cast<std::int64_t>(u.traces.loses.size()));
      rec.stats.merge(u.stats);
      if (!u.losses.empty()) {
        rec.mean_win_loss += u.losses.front().win_loss;
        rec.mean_lose_loss += u.losses.front().lose_loss;
        rec.mean_total_loss += u.losses.front().total;
        rec.active_tokens += u.losses.front().active_token_count;
        rec.gated_out_tokens += u.losses.front().gated_out_count;
      }
    }
    const double n = static_cast<double>(updates.size());
    rec.mean_win_loss /= n;
    rec.mean_lose_loss /= n;
    rec.mean_total_loss /= n;
    rec.frac_needing_revision =
        rec.stats.prompts_seen > 0
            ? static_cast<double>(rec.stats.needing_revision()) / rec.stats.prompts_seen
            : 0.0;

    if (opts.on_round) opts.on_round(rec, global, updates);
    run.history.push_back(std::move(rec));
  }
  run.final_params = std::move(global);
  return run;
}

nlohmann::ordered_json to_json(const RoundRecord& r) {
  nlohmann::ordered_json j;
  j["round"] = r.round;
  j["selected"] = r.selected;
  j["win_counts"] = r.win_counts;
  j["lose_counts"] = r.lose_counts;
  j["accuracy_before"] = r.accuracy_before;
  j["accuracy"] = r.accuracy;
  j["mean_win_loss"] = r.mean_win_loss;
  j["mean_lose_loss"] = r.mean_lose_loss;
  j["mean_total_loss"] = r.mean_total_loss;
  j["frac_needing_revision"] = r.frac_needing_revision;
  j["prompts_seen"] = r.stats.prompts_seen;
  j["initial_correct"] = r.stats.initial_correct;
  j["corrected_at_attempt"] = r.stats.corrected_at_attempt;
  j["failed"] = r.stats.failed;
  j["skipped"] = r.stats.skipped;
  j["active_tokens"] = r.active_tokens;
  j["gated_out_tokens"] = r.gated_out_tokens;
  return j;
}

std::string summary_row(const RoundRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g", r.round, r.accuracy, r.mean_win_loss,
                r.mean_lose_loss, r.frac_needing_revision);
  return buf;
}

}  // namespace spear
