#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <random>

#include "spear/tasks.hpp"

using namespace spear;

namespace {

const Vocab kVocab{};  // 16 tokens, reserved 0..3

}  // namespace

TEST_CASE("copy tasks: construction") {
  const auto tasks = gen_copy_tasks(60, {2, 4, 0}, kVocab, 5);
  REQUIRE(tasks.size() == 60);
  for (const auto& t : tasks) {
    const auto n = static_cast<std::size_t>(t.category);
    REQUIRE(t.prompt.size() == n + 2);
    CHECK(t.prompt.front() == kVocab.bos);
    CHECK(t.prompt.back() == kVocab.sep);
    REQUIRE(t.answer.size() == n + 1);
    CHECK(t.answer.back() == kVocab.eos);
    CHECK(std::equal(t.answer.begin(), t.answer.end() - 1, t.prompt.begin() + 1));
    for (std::size_t i = 0; i < n; ++i) CHECK(!kVocab.is_reserved(t.answer[i]));
    CHECK(is_correct(t, t.answer, kVocab));
  }
}

TEST_CASE("copy tasks: payload [a,b] layout") {
  const auto tasks = gen_copy_tasks(1, {2, 2, 0}, kVocab, 1);
  const Token a = tasks[0].answer[0], b = tasks[0].answer[1];
  CHECK(tasks[0].prompt == TokenSeq{kVocab.bos, a, b, kVocab.sep});
  CHECK(tasks[0].answer == TokenSeq{a, b, kVocab.eos});
}

TEST_CASE("copy tasks: determinism, alphabet, balance, errors") {
  CHECK(gen_copy_tasks(50, {2, 4, 0}, kVocab, 9) == gen_copy_tasks(50, {2, 4, 0}, kVocab, 9));
  CHECK(gen_copy_tasks(50, {2, 4, 0}, kVocab, 9) != gen_copy_tasks(50, {2, 4, 0}, kVocab, 10));

  for (const auto& t : gen_copy_tasks(100, {1, 5, 3}, kVocab, 2)) {
    for (std::size_t i = 0; i + 1 < t.answer.size(); ++i) CHECK((t.answer[i] >= 4 && t.answer[i] <= 6));
  }

  std::map<int, int> counts;
  for (const auto& t : gen_copy_tasks(400, {2, 4, 0}, kVocab, 3)) ++counts[t.category];
  REQUIRE(counts.size() == 3);
  for (const auto& [c, n] : counts) CHECK(std::abs(n - 400.0 / 3) <= 0.1 * 400.0 / 3);

  CHECK_THROWS_AS(gen_copy_tasks(5, {0, 2, 0}, kVocab, 1), InputError);
  CHECK_THROWS_AS(gen_copy_tasks(5, {3, 2, 0}, kVocab, 1), InputError);
}

TEST_CASE("mcq tasks") {
  const McqCorpusOptions opts{4, 4};
  const auto tasks = gen_mcq_tasks(240, opts, kVocab, 4);
  std::map<Token, Token> mapping;
  std::map<int, int> cats;
  for (const auto& t : tasks) {
    REQUIRE(t.prompt.size() == 1 + 1 + 4 + 1);
    const Token key = t.prompt[1];
    const TokenSeq options(t.prompt.begin() + 2, t.prompt.end() - 1);
    REQUIRE(t.answer.size() == 2);
    const Token ans = t.answer[0];
    CHECK(std::count(options.begin(), options.end(), ans) == 1);
    auto sorted = options;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    CHECK(ans == mcq_correct_option(kVocab, key));
    if (mapping.count(key)) CHECK(mapping[key] == ans);
    mapping[key] = ans;
    CHECK(t.category == key % 4);
    ++cats[t.category];
    CHECK(is_correct(t, t.answer, kVocab));
  }
  // same key, different presentation, same answer
  bool saw_permutation = false;
  for (std::size_t i = 0; i < tasks.size() && !saw_permutation; ++i) {
    for (std::size_t j = i + 1; j < tasks.size(); ++j) {
      if (tasks[i].prompt[1] == tasks[j].prompt[1] && tasks[i].prompt != tasks[j].prompt) {
        CHECK(tasks[i].answer == tasks[j].answer);
        saw_permutation = true;
        break;
      }
    }
  }
  CHECK(saw_permutation);
  for (const auto& [c, n] : cats) CHECK(std::abs(n - 60) <= 6);

  CHECK_THROWS_AS(gen_mcq_tasks(3, {1, 4}, kVocab, 0), InputError);
  CHECK_THROWS_AS(gen_mcq_tasks(3, {9, 4}, kVocab, 0), InputError);
}

TEST_CASE("mcq: a uniform chooser scores about 1/4") {
  const auto tasks = gen_mcq_tasks(2000, {4, 4}, kVocab, 6);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> pick(0, 3);
  int hits = 0;
  for (const auto& t : tasks) {
    const Token guess = t.prompt[static_cast<std::size_t>(2 + pick(rng))];
    hits += is_correct(t, {guess, kVocab.eos}, kVocab);
  }
  CHECK(std::abs(hits / 2000.0 - 0.25) < 0.03);
}

TEST_CASE("answer_region") {
  const Token a = 5, b = 6, c = 7;
  const Token SEP = kVocab.sep, EOS = kVocab.eos;
  CHECK(answer_region({a, b, EOS}, kVocab) == TokenSeq{a, b});
  CHECK(answer_region({a, SEP, c, EOS}, kVocab) == TokenSeq{c});
  CHECK(answer_region({a, SEP, b, c}, kVocab) == TokenSeq{b, c});
  CHECK(answer_region({a, b, EOS, c}, kVocab) == TokenSeq{a, b});
  CHECK(answer_region({}, kVocab).empty());
}

TEST_CASE("is_correct") {
  Task t;
  t.answer = {5, 6, kVocab.eos};
  CHECK(is_correct(t, {5, 6, kVocab.eos}, kVocab));
  CHECK(is_correct(t, {5, 6}, kVocab));
  CHECK_FALSE(is_correct(t, {5, 7, kVocab.eos}, kVocab));
  CHECK_FALSE(is_correct(t, {5, 6, 9, kVocab.eos}, kVocab));
  CHECK_FALSE(is_correct(t, {5, kVocab.eos}, kVocab));
}

TEST_CASE("hint_for") {
  Task t;
  t.answer = {5, 6, 7, 8, kVocab.eos};
  CHECK(hint_for(t, kVocab, 0.5) == TokenSeq{kVocab.feedback, 5, 6});
  t.answer = {5, kVocab.eos};
  CHECK(hint_for(t, kVocab, 0.5) == TokenSeq{kVocab.feedback, 5});
  t.answer = {5, 6, kVocab.eos};
  CHECK(hint_for(t, kVocab, 0.99) == TokenSeq{kVocab.feedback, 5});
  CHECK(hint_for(t, kVocab, 0.0) == TokenSeq{kVocab.feedback, 5});

  // never the full answer for answers of two or more tokens
  for (const auto& task : gen_copy_tasks(200, {2, 6, 0}, kVocab, 8)) {
    for (double r : {0.1, 0.5, 0.9, 1.0}) {
      const auto h = hint_for(task, kVocab, r);
      CHECK(h.size() - 1 < task.answer.size() - 1);
      CHECK(std::equal(h.begin() + 1, h.end(), task.answer.begin()));
    }
  }
}

TEST_CASE("corpus jsonl round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "spear_test_tasks";
  std::filesystem::create_directories(dir);
  const auto tasks = gen_copy_tasks(25, {2, 4, 0}, kVocab, 12);
  write_corpus_jsonl(tasks, dir / "c.jsonl");
  CHECK(read_corpus_jsonl(dir / "c.jsonl") == tasks);
  CHECK_THROWS_AS(read_corpus_jsonl(dir / "missing.jsonl"), InputError);
  std::filesystem::remove_all(dir);
}
