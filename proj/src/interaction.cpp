#include "spear/interaction.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace spear {

void SpearHyper::validate() const {
  if (!(lambda_w > 0.0) || !std::isfinite(lambda_w)) throw InputError("lambda_w must be positive");
  if (!(lambda_l >= 0.0) || !std::isfinite(lambda_l)) throw InputError("lambda_l must be nonnegative");
  if (!(mu > 0.0 && mu < 1.0)) throw InputError("mu must lie strictly inside (0, 1)");
  if (tau < 0) throw InputError("tau must be nonnegative");
  if (max_revisions < 1) throw InputError("N (max revisions) must be >= 1");
  if (!(temperature > 0.0)) throw InputError("temperature must be positive");
  if (!(numeric_floor > 0.0 && numeric_floor < 1.0)) throw InputError("numeric_floor must lie in (0, 1)");
}

void InteractionConfig::validate() const {
  if (!(hint_ratio > 0.0 && hint_ratio <= 1.0)) throw InputError("hint_ratio must lie in (0, 1]");
  if (max_completion_len < 1) throw InputError("max_completion_len must be >= 1");
}

int InteractionStats::corrected() const {
  return std::accumulate(corrected_at_attempt.begin(), corrected_at_attempt.end(), 0);
}

bool InteractionStats::consistent() const {
  return initial_correct + corrected() + failed + skipped == prompts_seen;
}

void InteractionStats::merge(const InteractionStats& other) {
  prompts_seen += other.prompts_seen;
  initial_correct += other.initial_correct;
  failed += other.failed;
  skipped += other.skipped;
  if (corrected_at_attempt.size() < other.corrected_at_attempt.size()) {
    corrected_at_attempt.resize(other.corrected_at_attempt.size(), 0);
  }
  for (std::size_t i = 0; i < other.corrected_at_attempt.size(); ++i) {
    corrected_at_attempt[i] += other.corrected_at_attempt[i];
  }
}

bool is_correct_completion(const Task& task, const TokenSeq& completion, const Vocab& vocab) {
  return is_correct(task, completion, vocab);
}

TokenSeq feedback(const Task& task, const TokenSeq& /*attempt*/, const Vocab& vocab,
                  double hint_ratio) {
  return hint_for(task, vocab, hint_ratio);
}

InteractionOracle default_oracle(const Vocab& vocab, double hint_ratio) {
  return {
      [vocab](const Task& t, const TokenSeq& y, int) { return is_correct(t, y, vocab); },
      [vocab, hint_ratio](const Task& t, const TokenSeq& y) { return feedback(t, y, vocab, hint_ratio); },
  };
}

TokenSeq build_revision_context(const TokenSeq& c0, const TokenSeq& y_prev, const TokenSeq& f,
                                int max_seq_len) {
  TokenSeq ctx;
  ctx.reserve(c0.size() + y_prev.size() + f.size());
  ctx.insert(ctx.end(), c0.begin(), c0.end());
  ctx.insert(ctx.end(), y_prev.begin(), y_prev.end());
  ctx.insert(ctx.end(), f.begin(), f.end());
  if (max_seq_len > 0 && ctx.size() > static_cast<std::size_t>(max_seq_len)) {
    ctx.erase(ctx.begin(), ctx.end() - max_seq_len);
  }
  return ctx;
}

InteractionResult run_interaction_phase(const ModelSpec& spec, const ParamVector& params,
                                        std::span<const Task> prompts, const SpearHyper& hyper,
                                        const InteractionConfig& icfg, const InteractionOracle& oracle,
                                        const StreamId& stream) {
  hyper.validate();
  icfg.validate();
  if (prompts.empty()) throw InputError("interaction phase needs at least one prompt");
  if (!oracle.judge || !oracle.feedback) throw InputError("interaction oracle is incomplete");

  InteractionResult res{{}, InteractionStats(hyper.max_revisions)};
  const int N = hyper.max_revisions;
  for (std::size_t j = 0; j < prompts.size(); ++j) {
    const Task& task = prompts[j];
    auto draw = [&](const TokenSeq& ctx, int attempt) {
      const auto seed = derive_seed({stream.seed, stream.client, stream.round, j,
                                     static_cast<std::uint64_t>(attempt)});
      return sample_completion(spec, params, ctx, hyper.temperature, icfg.max_completion_len, seed);
    };
    ++res.stats.prompts_seen;
    const TokenSeq& c0 = task.prompt;
    const TokenSeq y0 = draw(c0, 0);
    if (y0.empty()) {
      ++res.stats.skipped;
      continue;
    }
    if (oracle.judge(task, y0, 0)) {
      res.traces.wins.push_back({c0, y0});
      ++res.stats.initial_correct;
      continue;
    }
    bool fixed = false;
    TokenSeq y_prev = y0;
    for (int n = 1; n <= N; ++n) {
      const TokenSeq f = oracle.feedback(task, y_prev);
      const TokenSeq ctx = build_revision_context(c0, y_prev, f, spec.max_seq_len);
      TokenSeq yn = draw(ctx, n);
      if (!yn.empty() && oracle.judge(task, yn, n)) {
        res.traces.wins.push_back({c0, std::move(yn)});
        res.traces.loses.push_back({c0, y0, kAlphaCorrected});
        ++res.stats.corrected_at_attempt[static_cast<std::size_t>(n - 1)];
        fixed = true;
        break;
      }
      y_prev = std::move(yn);
    }
    if (!fixed) {
      res.traces.loses.push_back({c0, y0, kAlphaFailed});
      ++res.stats.failed;
    }
  }
  return res;
}

void write_traces_jsonl(const TraceSets& traces, const std::filesystem::path& path, bool append) {
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  for (const auto& w : traces.wins) {
    nlohmann::ordered_json j;
    j["role"] = "win";
    j["alpha"] = nullptr;
    j["context"] = w.context0;
    j["completion"] = w.completion;
    out << j.dump() << '\n';
  }
  for (const auto& l : traces.loses) {
    nlohmann::ordered_json j;
    j["role"] = "lose";
    j["alpha"] = l.alpha;
    j["context"] = l.context0;
    j["completion"] = l.completion;
    out << j.dump() << '\n';
  }
}

TraceSets read_traces_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  TraceSets out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    const auto role = j.at("role").get<std::string>();
    auto ctx = j.at("context").get<TokenSeq>();
    auto y = j.at("completion").get<TokenSeq>();
    if (role == "win") {
      out.wins.push_back({std::move(ctx), std::move(y)});
    } else if (role == "lose") {
      const double a = j.at("alpha").get<double>();
      if (a != kAlphaCorrected && a != kAlphaFailed) throw InputError("lose alpha must be 0.5 or 1.0");
      out.loses.push_back({std::move(ctx), std::move(y), a});
    } else {
      throw InputError("unknown trace role: " + role);
    }
  }
  return out;
}

}  // namespace spear
