#pragma once

#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "spear/config.hpp"
#include "spear/federation.hpp"

namespace spear {

struct Corpora {
  std::vector<Task> pool;      // partitioned across clients
  std::vector<Task> eval;      // held out, greedy accuracy
  std::vector<Task> pretrain;  // warm start only; empty unless init.kind == "pretrain"
};

// All three corpora derive from federation.seed through distinct streams.
Corpora make_corpora(const RunConfig& cfg);

// Global model at round 0.
ParamVector initial_params(const RunConfig& cfg, const Corpora& corpora);

using RoundObserver =
    std::function<void(const RoundRecord&, const ParamVector& global, std::span<const ClientUpdate>)>;

struct RunOptions {
  int workers = 1;
  RoundObserver on_round;
};

struct FederatedRun {
  std::vector<RoundRecord> history;
  ParamVector final_params;
  double initial_accuracy = 0.0;
};

// Select, broadcast, train locally, aggregate, evaluate; once per round.
// Results do not depend on `workers`.
FederatedRun run_federated(const RunConfig& cfg, const RunOptions& opts = {});

nlohmann::ordered_json to_json(const RoundRecord& r);

inline constexpr const char* kSummaryHeader =
    "round,accuracy,mean_win_loss,mean_lose_loss,frac_needing_revision";
std::string summary_row(const RoundRecord& r);

}  // namespace spear
