#include "spear/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

namespace spear {

namespace {

std::vector<Token> alphabet_for(const Vocab& vocab, int limit) {
  auto content = vocab.content_tokens();
  if (limit > 0 && static_cast<std::size_t>(limit) < content.size()) content.resize(limit);
  return content;
}

}  // namespace

std::vector<Task> gen_copy_tasks(int count, const CopyCorpusOptions& opts, const Vocab& vocab,
                                 std::uint64_t seed) {
  vocab.validate();
  if (opts.payload_min < 1 || opts.payload_max < opts.payload_min) {
    throw InputError("payload length range must satisfy 1 <= min <= max");
  }
  if (count < 0) throw InputError("task count must be nonnegative");
  const auto alphabet = alphabet_for(vocab, opts.alphabet);
  if (alphabet.empty()) throw InputError("vocab has no content tokens");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  const int span = opts.payload_max - opts.payload_min + 1;
  std::vector<Task> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const int len = opts.payload_min + i % span;
    Task t;
    t.task_id = i;
    t.category = len;
    t.prompt.push_back(vocab.bos);
    for (int j = 0; j < len; ++j) {
      const Token tok = alphabet[pick(rng)];
      t.prompt.push_back(tok);
      t.answer.push_back(tok);
    }
    t.prompt.push_back(vocab.sep);
    t.answer.push_back(vocab.eos);
    out.push_back(std::move(t));
  }
  return out;
}

Token mcq_correct_option(const Vocab& vocab, Token key) {
  const auto content = vocab.content_tokens();
  const auto n = content.size();
  const auto it = std::find(content.begin(), content.end(), key);
  if (it == content.end()) throw InputError("mcq key must be a content token");
  const auto idx = static_cast<std::size_t>(it - content.begin());
  return content[(idx * 5 + 3) % n];
}

std::vector<Task> gen_mcq_tasks(int count, const McqCorpusOptions& opts, const Vocab& vocab,
                                std::uint64_t seed) {
  vocab.validate();
  if (opts.num_options < 2 || opts.num_options > 8) throw InputError("num_options must be in [2, 8]");
  if (opts.num_categories < 1) throw InputError("num_categories must be >= 1");
  const auto content = vocab.content_tokens();
  if (content.size() < static_cast<std::size_t>(opts.num_options)) {
    throw InputError("vocab has fewer content tokens than options");
  }
  std::mt19937_64 rng(seed);
  std::vector<Task> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const Token key = content[static_cast<std::size_t>(i) % content.size()];
    const Token correct = mcq_correct_option(vocab, key);
    std::vector<Token> pool;
    for (Token t : content) {
      if (t != correct) pool.push_back(t);
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<Token> options(pool.begin(), pool.begin() + (opts.num_options - 1));
    options.push_back(correct);
    std::shuffle(options.begin(), options.end(), rng);

    Task t;
    t.task_id = i;
    t.category = key % opts.num_categories;
    t.prompt.push_back(vocab.bos);
    t.prompt.push_back(key);
    t.prompt.insert(t.prompt.end(), options.begin(), options.end());
    t.prompt.push_back(vocab.sep);
    t.answer = {correct, vocab.eos};
    out.push_back(std::move(t));
  }
  // Keys are assigned round-robin; shuffle so shards are not ordered by key.
  std::shuffle(out.begin(), out.end(), rng);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].task_id = static_cast<std::int64_t>(i);
  return out;
}

TokenSeq answer_region(const TokenSeq& completion, const Vocab& vocab) {
  auto begin = completion.begin();
  const auto last_sep = std::find(completion.rbegin(), completion.rend(), vocab.sep);
  if (last_sep != completion.rend()) begin = last_sep.base();
  const auto end = std::find(begin, completion.end(), vocab.eos);
  return {begin, end};
}

bool is_correct(const Task& task, const TokenSeq& completion, const Vocab& vocab) {
  return answer_region(completion, vocab) == answer_region(task.answer, vocab);
}

TokenSeq hint_for(const Task& task, const Vocab& vocab, double ratio) {
  const auto answer = answer_region(task.answer, vocab);
  TokenSeq hint{vocab.feedback};
  if (answer.empty()) return hint;
  const auto n = static_cast<long>(answer.size());
  long k = static_cast<long>(std::floor(ratio * static_cast<double>(n)));
  k = std::clamp(k, 1L, std::max(1L, n - 1));
  hint.insert(hint.end(), answer.begin(), answer.begin() + k);
  return hint;
}

void write_corpus_jsonl(const std::vector<Task>& tasks, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  for (const auto& t : tasks) {
    nlohmann::ordered_json j;
    j["task_id"] = t.task_id;
    j["category"] = t.category;
    j["prompt"] = t.prompt;
    j["answer"] = t.answer;
    out << j.dump() << '\n';
  }
}

std::vector<Task> read_corpus_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<Task> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    Task t;
    t.task_id = j.at("task_id").get<std::int64_t>();
    t.category = j.at("category").get<int>();
    t.prompt = j.at("prompt").get<TokenSeq>();
    t.answer = j.at("answer").get<TokenSeq>();
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace spear
