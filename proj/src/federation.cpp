#include "spear/federation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace spear {

void FedConfig::validate() const {
  if (num_clients < 1) throw InputError("num_clients must be >= 1");
  if (clients_per_round < 1 || clients_per_round > num_clients) {
    throw InputError("clients_per_round must lie in [1, num_clients]");
  }
  if (rounds < 0) throw InputError("rounds must be >= 0");
  if (local_steps < 0) throw InputError("local_steps must be >= 0");
  if (prompts_per_round < 1) throw InputError("prompts_per_round must be >= 1");
  if (!(dirichlet_alpha > 0.0)) throw InputError("dirichlet_alpha must be positive");
}

std::vector<std::vector<Task>> partition_dirichlet(std::span<const Task> tasks, int num_clients,
                                                   double alpha, std::uint64_t seed) {
  if (num_clients < 1) throw InputError("need at least one client");
  if (tasks.size() < static_cast<std::size_t>(num_clients)) {
    throw InputError("fewer tasks (" + std::to_string(tasks.size()) + ") than clients (" +
                     std::to_string(num_clients) + ")");
  }
  if (!(alpha > 0.0)) throw InputError("dirichlet alpha must be positive");

  const auto K = static_cast<std::size_t>(num_clients);
  std::map<int, std::vector<std::size_t>> by_category;
  for (std::size_t i = 0; i < tasks.size(); ++i) by_category[tasks[i].category].push_back(i);

  std::mt19937_64 rng(derive_seed({seed, 0xd1c1e7ULL}));
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<std::vector<std::size_t>> assign(K);
  for (auto& [category, idx] : by_category) {
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<double> props(K);
    double total = 0.0;
    for (auto& p : props) total += (p = gamma(rng));
    if (!(total > 0.0)) {
      // Every draw underflowed (tiny alpha): the category goes to one client.
      std::fill(props.begin(), props.end(), 0.0);
      props[std::uniform_int_distribution<std::size_t>(0, K - 1)(rng)] = 1.0;
      total = 1.0;
    }
    const double n = static_cast<double>(idx.size());
    double cum = 0.0;
    std::size_t begin = 0;
    for (std::size_t k = 0; k < K; ++k) {
      cum += props[k];
      const std::size_t end =
          k + 1 == K ? idx.size() : std::min(idx.size(), static_cast<std::size_t>(std::llround(cum / total * n)));
      for (std::size_t i = begin; i < std::max(begin, end); ++i) assign[k].push_back(idx[i]);
      begin = std::max(begin, end);
    }
  }

  for (std::size_t k = 0; k < K; ++k) {
    if (!assign[k].empty()) continue;
    std::size_t largest = 0;
    for (std::size_t j = 1; j < K; ++j) {
      if (assign[j].size() > assign[largest].size()) largest = j;
    }
    assign[k].push_back(assign[largest].back());
    assign[largest].pop_back();
  }

  std::vector<std::vector<Task>> shards(K);
  for (std::size_t k = 0; k < K; ++k) {
    std::sort(assign[k].begin(), assign[k].end());
    for (auto i : assign[k]) shards[k].push_back(tasks[i]);
  }
  return shards;
}

namespace {

std::vector<Task> sample_prompts(const std::vector<Task>& shard, int count, std::mt19937_64& rng) {
  std::vector<Task> out;
  out.reserve(static_cast<std::size_t>(count));
  if (shard.size() >= static_cast<std::size_t>(count)) {
    std::vector<std::size_t> idx(shard.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), idx.size() - 1);
      std::swap(idx[static_cast<std::size_t>(i)], idx[pick(rng)]);
      out.push_back(shard[idx[static_cast<std::size_t>(i)]]);
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, shard.size() - 1);
    for (int i = 0; i < count; ++i) out.push_back(shard[pick(rng)]);
  }
  return out;
}

}  // namespace

ClientUpdate local_round(ClientState& client, const ParamVector& global_params,
                         const LocalContext& ctx, int round) {
  ClientUpdate up;
  up.client_id = client.client_id;
  up.params = global_params;
  up.stats = InteractionStats(ctx.hyper.max_revisions);
  if (client.shard.empty()) return up;

  const auto& fed = ctx.fed;
  std::mt19937_64 rng(derive_seed({fed.seed, static_cast<std::uint64_t>(round),
                                   static_cast<std::uint64_t>(client.client_id), 0x9a3b1eULL}));
  const auto prompts = sample_prompts(client.shard, fed.prompts_per_round, rng);
  auto interaction = run_interaction_phase(
      ctx.spec, up.params, prompts, ctx.hyper, ctx.interaction, ctx.oracle,
      {fed.seed, static_cast<std::uint64_t>(client.client_id), static_cast<std::uint64_t>(round)});
  up.stats = interaction.stats;
  up.win_count = static_cast<std::int64_t>(interaction.traces.wins.size());

  const std::int64_t schedule_pos = static_cast<std::int64_t>(round) * fed.local_steps;
  OptimState state;
  if (ctx.optim.persist_state && client.optim) {
    state = std::move(*client.optim);
    state.schedule_offset = schedule_pos - state.step_count;
  } else {
    state = OptimState::fresh(ctx.optim, up.params.size(), fed.total_steps());
    state.schedule_offset = schedule_pos;
  }

  ParamVector grad(up.params.size());
  for (int e = 0; e < fed.local_steps; ++e) {
    const auto lb = loss_and_grad_spear(ctx.spec, up.params, interaction.traces, ctx.hyper, grad);
    up.losses.push_back(lb);
    step_inplace(state, up.params, grad, lb.total != 0.0);
  }
  if (ctx.optim.persist_state) client.optim = std::move(state);
  up.traces = std::move(interaction.traces);
  return up;
}

ParamVector aggregate(std::span<const ClientUpdate> updates, const ParamVector& previous_global) {
  const auto dim = previous_global.size();
  std::int64_t total = 0;
  for (const auto& u : updates) {
    if (u.params.size() != dim) throw InputError("client parameter dimension mismatch");
    if (u.win_count < 0) throw InputError("negative win count");
    total += u.win_count;
  }
  if (total == 0) return previous_global;

  std::vector<std::size_t> order(updates.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ua = updates[a];
    const auto& ub = updates[b];
    if (ua.client_id != ub.client_id) return ua.client_id < ub.client_id;
    if (ua.win_count != ub.win_count) return ua.win_count < ub.win_count;
    return ua.params.raw() < ub.params.raw();
  });

  ParamVector out(dim);
  const double denom = static_cast<double>(total);
  for (auto i : order) {
    const auto& u = updates[i];
    if (u.win_count == 0) continue;
    out.add_scaled(u.params, static_cast<double>(u.win_count) / denom);
  }
  return out;
}

double evaluate_accuracy(const ModelSpec& spec, const ParamVector& params,
                         std::span<const Task> tasks, int max_len) {
  if (tasks.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& t : tasks) {
    if (is_correct(t, greedy_completion(spec, params, t.prompt, max_len), spec.vocab)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(tasks.size());
}

std::vector<int> select_clients(int num_clients, int per_round, std::uint64_t seed, int round) {
  if (per_round < 1 || per_round > num_clients) throw InputError("clients_per_round out of range");
  std::mt19937_64 rng(derive_seed({seed, static_cast<std::uint64_t>(round), 0x5e1ec7ULL}));
  std::vector<int> ids(static_cast<std::size_t>(num_clients));
  std::iota(ids.begin(), ids.end(), 0);
  for (int i = 0; i < per_round; ++i) {
    std::uniform_int_distribution<int> pick(i, num_clients - 1);
    std::swap(ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(pick(rng))]);
  }
  ids.resize(static_cast<std::size_t>(per_round));
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace spear
