#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "spear/hyper.hpp"
#include "spear/model.hpp"
#include "spear/tasks.hpp"
#include "spear/traces.hpp"

namespace spear {

struct InteractionStats {
  int prompts_seen = 0;
  int initial_correct = 0;
  std::vector<int> corrected_at_attempt;  // index n-1 counts success at revision n
  int failed = 0;
  int skipped = 0;  // empty sampled completion

  explicit InteractionStats(int max_revisions = 0)
      : corrected_at_attempt(static_cast<std::size_t>(std::max(0, max_revisions)), 0) {}

  int corrected() const;
  int needing_revision() const { return prompts_seen - initial_correct - skipped; }
  bool consistent() const;
  void merge(const InteractionStats& other);
};

// The user side of the loop. `judge` receives the attempt index (0 for the
// initial generation, n for revision n) so tests can script schedules.
struct InteractionOracle {
  std::function<bool(const Task&, const TokenSeq& completion, int attempt)> judge;
  std::function<TokenSeq(const Task&, const TokenSeq& attempt)> feedback;
};

// Judge by exact answer match; feedback is an answer-prefix hint that depends
// on the task only.
InteractionOracle default_oracle(const Vocab& vocab, double hint_ratio);

bool is_correct_completion(const Task& task, const TokenSeq& completion, const Vocab& vocab);
TokenSeq feedback(const Task& task, const TokenSeq& attempt, const Vocab& vocab, double hint_ratio);

// c0 || y_prev || f, keeping the most recent max_seq_len tokens.
TokenSeq build_revision_context(const TokenSeq& c0, const TokenSeq& y_prev, const TokenSeq& f,
                                int max_seq_len);

// Identifies the RNG stream of one client round. Each prompt draws from
// derive_seed(seed, client, round, prompt index, attempt).
struct StreamId {
  std::uint64_t seed = 0;
  std::uint64_t client = 0;
  std::uint64_t round = 0;
};

struct InteractionResult {
  TraceSets traces;
  InteractionStats stats;
};

InteractionResult run_interaction_phase(const ModelSpec& spec, const ParamVector& params,
                                        std::span<const Task> prompts, const SpearHyper& hyper,
                                        const InteractionConfig& icfg, const InteractionOracle& oracle,
                                        const StreamId& stream);

}  // namespace spear
