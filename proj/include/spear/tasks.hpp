#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "spear/common.hpp"
#include "spear/model.hpp"

namespace spear {

struct Task {
  std::int64_t task_id = 0;
  int category = 0;
  TokenSeq prompt;  // ends with SEP
  TokenSeq answer;  // ends with EOS

  friend bool operator==(const Task&, const Task&) = default;
};

struct CopyCorpusOptions {
  int payload_min = 2;
  int payload_max = 4;
  // Number of content tokens payloads draw from; 0 means every non-reserved id.
  int alphabet = 0;
};

// prompt = BOS payload SEP, answer = payload EOS, category = payload length.
// Payload lengths cycle through the range so categories stay balanced.
std::vector<Task> gen_copy_tasks(int count, const CopyCorpusOptions& opts, const Vocab& vocab,
                                 std::uint64_t seed);

struct McqCorpusOptions {
  int num_options = 4;
  int num_categories = 4;
};

// prompt = BOS key opt_1 .. opt_n SEP, answer = correct_option EOS.
// The correct option is a fixed function of the key (see mcq_correct_option);
// distractors and presentation order are random. category = key mod
// num_categories.
std::vector<Task> gen_mcq_tasks(int count, const McqCorpusOptions& opts, const Vocab& vocab,
                                std::uint64_t seed);

Token mcq_correct_option(const Vocab& vocab, Token key);

// Tokens after the last SEP (or the whole completion when there is none), up
// to and excluding the first EOS that follows.
TokenSeq answer_region(const TokenSeq& completion, const Vocab& vocab);

// Exact match of answer regions; trailing tokens before EOS fail.
bool is_correct(const Task& task, const TokenSeq& completion, const Vocab& vocab);

// FEEDBACK marker followed by the first floor(ratio * |answer|) answer tokens,
// clamped to [1, |answer| - 1] (a one-token answer yields itself).
TokenSeq hint_for(const Task& task, const Vocab& vocab, double ratio);

void write_corpus_jsonl(const std::vector<Task>& tasks, const std::filesystem::path& path);
std::vector<Task> read_corpus_jsonl(const std::filesystem::path& path);

}  // namespace spear
