#pragma once

#include <filesystem>
#include <vector>

#include "spear/common.hpp"

namespace spear {

struct WinTrace {
  TokenSeq context0;
  TokenSeq completion;

  friend bool operator==(const WinTrace&, const WinTrace&) = default;
};

struct LoseTrace {
  TokenSeq context0;
  TokenSeq completion;  // always the initial generation y^(0)
  double alpha = 0.5;   // 1.0 when a later revision succeeded, 0.5 otherwise

  friend bool operator==(const LoseTrace&, const LoseTrace&) = default;
};

struct TraceSets {
  std::vector<WinTrace> wins;
  std::vector<LoseTrace> loses;

  bool empty() const { return wins.empty() && loses.empty(); }
  friend bool operator==(const TraceSets&, const TraceSets&) = default;
};

// Confidence weights a lose trace may carry.
inline constexpr double kAlphaCorrected = 1.0;
inline constexpr double kAlphaFailed = 0.5;

// One JSON object per line: {"role": "win"|"lose", "alpha": ..., "context": [...],
// "completion": [...]}. Wins carry alpha = null.
void write_traces_jsonl(const TraceSets& traces, const std::filesystem::path& path, bool append = false);
TraceSets read_traces_jsonl(const std::filesystem::path& path);

}  // namespace spear
