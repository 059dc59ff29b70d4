#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "spear/common.hpp"

namespace spear {

// Token vocabulary with four reserved markers. Ids 0..3 are reserved by
// default; content tokens start at first_content().
struct Vocab {
  int size = 16;
  Token bos = 0;
  Token eos = 1;
  Token sep = 2;
  Token feedback = 3;

  void validate() const;
  bool contains(Token t) const { return t >= 0 && t < size; }
  bool is_reserved(Token t) const { return t == bos || t == eos || t == sep || t == feedback; }
  // Non-reserved ids in ascending order.
  std::vector<Token> content_tokens() const;
};

// Flat parameter vector with value semantics. One entry per logit-table cell.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t dim, double fill = 0.0) : values_(dim, fill) {}
  explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  const std::vector<double>& raw() const { return values_; }

  // this += scale * other
  void add_scaled(const ParamVector& other, double scale);
  void scale(double factor);
  bool all_finite() const;
  bool is_zero() const;

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<double> values_;
};

// Checkpoint format: uint64 little-endian element count, then that many
// little-endian IEEE-754 doubles.
void save_params(const ParamVector& params, const std::filesystem::path& path);
ParamVector load_params(const std::filesystem::path& path);

// Order-n tabular softmax model: the logit row is selected by the last
// (order - 1) tokens of the context, left-padded with BOS.
struct ModelSpec {
  Vocab vocab;
  int order = 3;
  int max_seq_len = 64;

  void validate() const;
  std::size_t num_rows() const;
  std::size_t param_dim() const { return num_rows() * static_cast<std::size_t>(vocab.size); }
};

// Rolling row index over the last (order - 1) tokens.
class ContextWindow {
 public:
  ContextWindow(const ModelSpec& spec, const TokenSeq& ctx);
  void push(Token t);
  std::size_t row() const { return row_; }
  std::size_t offset() const { return row_ * vocab_; }

 private:
  std::size_t vocab_;
  std::size_t rows_;
  std::size_t row_ = 0;
};

void check_tokens(const ModelSpec& spec, const TokenSeq& seq, const char* what);

std::vector<double> logits(const ModelSpec& spec, const ParamVector& params, const TokenSeq& ctx);

std::vector<double> next_token_dist(const ModelSpec& spec, const ParamVector& params,
                                    const TokenSeq& ctx, double temperature);

// Numerically stable softmax(z / temperature).
std::vector<double> softmax(std::span<const double> z, double temperature = 1.0);

// sum_i log p(y_i | ctx, y_<i) at temperature 1.
double seq_log_prob(const ModelSpec& spec, const ParamVector& params, const TokenSeq& ctx,
                    const TokenSeq& y);

std::vector<double> token_probs_along(const ModelSpec& spec, const ParamVector& params,
                                      const TokenSeq& ctx, const TokenSeq& y);
std::vector<double> token_log_probs_along(const ModelSpec& spec, const ParamVector& params,
                                          const TokenSeq& ctx, const TokenSeq& y);

// Autoregressive sampling; the EOS token, when drawn, is kept as the last
// element of the completion.
TokenSeq sample_completion(const ModelSpec& spec, const ParamVector& params, const TokenSeq& ctx,
                           double temperature, int max_len, std::uint64_t rng_seed);

// Argmax decoding, ties broken toward the lower token id.
TokenSeq greedy_completion(const ModelSpec& spec, const ParamVector& params, const TokenSeq& ctx,
                           int max_len);

// Gradient of sum_i weights[i] * log p(y_i | ctx, y_<i) w.r.t. params.
ParamVector grad_log_prob(const ModelSpec& spec, const ParamVector& params, const TokenSeq& ctx,
                          const TokenSeq& y, std::span<const double> weights);

// Same as grad_log_prob but adds into `out`.
void accumulate_grad_log_prob(const ModelSpec& spec, const ParamVector& params,
                              const TokenSeq& ctx, const TokenSeq& y,
                              std::span<const double> weights, ParamVector& out);

}  // namespace spear
