#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "spear/hyper.hpp"
#include "spear/interaction.hpp"
#include "spear/loss.hpp"
#include "spear/model.hpp"
#include "spear/optim.hpp"
#include "spear/tasks.hpp"

namespace spear {

struct FedConfig {
  int num_clients = 50;
  int clients_per_round = 5;
  int rounds = 30;
  int local_steps = 5;
  int prompts_per_round = 16;
  double dirichlet_alpha = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  std::int64_t total_steps() const {
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(rounds) * local_steps);
  }
};

// Splits tasks across K clients. Each category is divided by its own
// Dirichlet(alpha) draw; afterwards every empty shard takes one task from the
// currently largest shard.
std::vector<std::vector<Task>> partition_dirichlet(std::span<const Task> tasks, int num_clients,
                                                   double alpha, std::uint64_t seed);

struct ClientState {
  int client_id = 0;
  std::vector<Task> shard;
  std::optional<OptimState> optim;  // kept only when OptimConfig::persist_state
};

struct ClientUpdate {
  int client_id = 0;
  ParamVector params;
  std::int64_t win_count = 0;
  InteractionStats stats;
  std::vector<LossBreakdown> losses;  // one per local step, before the update
  TraceSets traces;
};

// Everything local_round needs besides the client and the global snapshot.
struct LocalContext {
  ModelSpec spec;
  SpearHyper hyper;
  InteractionConfig interaction;
  OptimConfig optim;
  FedConfig fed;
  InteractionOracle oracle;
};

ClientUpdate local_round(ClientState& client, const ParamVector& global_params,
                         const LocalContext& ctx, int round);

// Win-weighted average. Falls back to previous_global when no client has a
// win. Updates are combined in a canonical order so the result does not
// depend on the order of `updates`.
ParamVector aggregate(std::span<const ClientUpdate> updates, const ParamVector& previous_global);

// Fraction of tasks solved by greedy decoding from the prompt.
double evaluate_accuracy(const ModelSpec& spec, const ParamVector& params,
                         std::span<const Task> tasks, int max_len);

// Distinct client ids, ascending.
std::vector<int> select_clients(int num_clients, int per_round, std::uint64_t seed, int round);

struct RoundRecord {
  int round = 0;
  std::vector<int> selected;
  std::vector<std::int64_t> win_counts;
  std::vector<std::int64_t> lose_counts;
  double accuracy_before = 0.0;
  double accuracy = 0.0;
  double mean_win_loss = 0.0;
  double mean_lose_loss = 0.0;
  double mean_total_loss = 0.0;
  double frac_needing_revision = 0.0;
  InteractionStats stats;
  std::int64_t active_tokens = 0;
  std::int64_t gated_out_tokens = 0;
};

}  // namespace spear
