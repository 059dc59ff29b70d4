#include "spear/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace spear {

namespace {

constexpr std::size_t kMaxParamDim = std::size_t{1} << 27;

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffULL) << (8 * (7 - i));
    return r;
  }
}

void check_params(const ModelSpec& spec, const ParamVector& params) {
  if (params.size() != spec.param_dim()) {
    throw InputError("parameter vector has dimension " + std::to_string(params.size()) +
                     ", model expects " + std::to_string(spec.param_dim()));
  }
}

double log_sum_exp(std::span<const double> z) {
  double m = *std::max_element(z.begin(), z.end());
  if (!std::isfinite(m)) throw NumericError("non-finite logits");
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

std::span<const double> row_at(const ParamVector& params, const ContextWindow& w, int vocab) {
  return params.values().subspan(w.offset(), static_cast<std::size_t>(vocab));
}

}  // namespace

std::string to_string(const TokenSeq& seq) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < seq.size(); ++i) os << (i ? "," : "") << seq[i];
  os << ']';
  return os.str();
}

void Vocab::validate() const {
  if (size < 4) throw InputError("vocab size must be >= 4");
  const Token ids[] = {bos, eos, sep, feedback};
  for (int i = 0; i < 4; ++i) {
    if (!contains(ids[i])) throw InputError("reserved token id out of vocab range");
    for (int j = 0; j < i; ++j) {
      if (ids[i] == ids[j]) throw InputError("reserved token ids must be distinct");
    }
  }
}

std::vector<Token> Vocab::content_tokens() const {
  std::vector<Token> out;
  for (Token t = 0; t < size; ++t) {
    if (!is_reserved(t)) out.push_back(t);
  }
  return out;
}

void ParamVector::add_scaled(const ParamVector& other, double scale) {
  if (other.size() != size()) throw InputError("parameter dimension mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += scale * other.values_[i];
}

void ParamVector::scale(double factor) {
  for (auto& v : values_) v *= factor;
}

bool ParamVector::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

bool ParamVector::is_zero() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

void save_params(const ParamVector& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const std::uint64_t n = to_le(params.size());
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  for (double v : params.values()) {
    const std::uint64_t bits = to_le(std::bit_cast<std::uint64_t>(v));
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ParamVector load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + path.string());
  std::uint64_t n = 0;
  if (!in.read(reinterpret_cast<char*>(&n), sizeof n)) throw InputError("truncated checkpoint header");
  n = to_le(n);
  if (n > kMaxParamDim) throw InputError("checkpoint length header too large");
  std::vector<double> values(n);
  for (auto& v : values) {
    std::uint64_t bits = 0;
    if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits)) throw InputError("truncated checkpoint body");
    v = std::bit_cast<double>(to_le(bits));
  }
  return ParamVector(std::move(values));
}

void ModelSpec::validate() const {
  vocab.validate();
  if (order < 1) throw InputError("model order must be >= 1");
  if (max_seq_len < 1) throw InputError("max_seq_len must be >= 1");
  std::size_t dim = static_cast<std::size_t>(vocab.size);
  for (int i = 1; i < order; ++i) {
    dim *= static_cast<std::size_t>(vocab.size);
    if (dim > kMaxParamDim) throw InputError("vocab_size^order exceeds the parameter budget");
  }
}

std::size_t ModelSpec::num_rows() const {
  std::size_t rows = 1;
  for (int i = 1; i < order; ++i) rows *= static_cast<std::size_t>(vocab.size);
  return rows;
}

ContextWindow::ContextWindow(const ModelSpec& spec, const TokenSeq& ctx)
    : vocab_(static_cast<std::size_t>(spec.vocab.size)), rows_(spec.num_rows()) {
  const int history = spec.order - 1;
  const int pad = std::max(0, history - static_cast<int>(ctx.size()));
  for (int i = 0; i < pad; ++i) push(spec.vocab.bos);
  const std::size_t start = ctx.size() > static_cast<std::size_t>(history) ? ctx.size() - history : 0;
  for (std::size_t i = start; i < ctx.size(); ++i) push(ctx[i]);
}

void ContextWindow::push(Token t) {
  if (rows_ == 1) return;
  row_ = (row_ * vocab_ + static_cast<std::size_t>(t)) % rows_;
}

void check_tokens(const ModelSpec& spec, const TokenSeq& seq, const char* what) {
  for (Token t : seq) {
    if (!spec.vocab.contains(t)) {
      throw InputError(std::string(what) + " contains token " + std::to_string(t) +
                       " outside vocab of size " + std::to_string(spec.vocab.size));
    }
  }
}

std::vector<double> logits(const ModelSpec& spec, const ParamVector& params, const TokenSeq& ctx) {
  check_params(spec, params);
  if (ctx.empty()) throw InputError("context must be nonempty");
  check_tokens(spec, ctx, "context");
  ContextWindow w(spec, ctx);
  auto row = row_at(params, w, spec.vocab.size);
  return {row.begin(), row.end()};
}

std::vector<double> softmax(std::span<const double> z, double temperature) {
  if (!(temperature > 0.0)) throw InputError("temperature must be positive");
  std::vector<double> p(z.size());
  double m = -std::numeric_limits<double>::infinity();
  for (double v : z) {
    if (!std::isfinite(v)) throw NumericError("non-finite logits");
    m = std::max(m, v);
  }
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp((z[i] - m) / temperature);
    s += p[i];
  }
  for (auto& v : p) v /= s;
  return p;
}

std::vector<double> next_token_dist(const ModelSpec& spec, const ParamVector& params,
                                    const TokenSeq& ctx, double temperature) {
  if (!(temperature > 0.0)) throw InputError("temperature must be positive");
  return softmax(logits(spec, params, ctx), temperature);
}

std::vector<double> token_log_probs_along(const ModelSpec& spec, const ParamVector& params,
                                          const TokenSeq& ctx, const TokenSeq& y) {
  check_params(spec, params);
  if (y.empty()) throw InputError("completion must be nonempty");
  check_tokens(spec, ctx, "context");
  check_tokens(spec, y, "completion");
  ContextWindow w(spec, ctx);
  std::vector<double> out;
  out.reserve(y.size());
  for (Token t : y) {
    auto row = row_at(params, w, spec.vocab.size);
    out.push_back(row[static_cast<std::size_t>(t)] - log_sum_exp(row));
    w.push(t);
  }
  return out;
}

std::vector<double> token_probs_along(const ModelSpec& spec, const ParamVector& params,
                                      const TokenSeq& ctx, const TokenSeq& y) {
  auto lp = token_log_probs_along(spec, params, ctx, y);
  for (auto& v : lp) v = std::exp(v);
  return lp;
}

double seq_log_prob(const ModelSpec& spec, const ParamVector& params, const TokenSeq& ctx,
                    const TokenSeq& y) {
  double s = 0.0;
  for (double v : token_log_probs_along(spec, params, ctx, y)) s += v;
  return s;
}

TokenSeq sample_completion(const ModelSpec& spec, const ParamVector& params, const TokenSeq& ctx,
                           double temperature, int max_len, std::uint64_t rng_seed) {
  check_params(spec, params);
  if (max_len < 1) throw InputError("max_len must be >= 1");
  if (!(temperature > 0.0)) throw InputError("temperature must be positive");
  check_tokens(spec, ctx, "context");
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  ContextWindow w(spec, ctx);
  TokenSeq out;
  while (static_cast<int>(out.size()) < max_len) {
    auto p = softmax(row_at(params, w, spec.vocab.size), temperature);
    const double u = unif(rng);
    double acc = 0.0;
    Token pick = static_cast<Token>(p.size() - 1);
    for (std::size_t i = 0; i < p.size(); ++i) {
      acc += p[i];
      if (u < acc) {
        pick = static_cast<Token>(i);
        break;
      }
    }
    out.push_back(pick);
    if (pick == spec.vocab.eos) break;
    w.push(pick);
  }
  return out;
}

TokenSeq greedy_completion(const ModelSpec& spec, const ParamVector& params, const TokenSeq& ctx,
                           int max_len) {
  check_params(spec, params);
  if (max_len < 1) throw InputError("max_len must be >= 1");
  check_tokens(spec, ctx, "context");
  ContextWindow w(spec, ctx);
  TokenSeq out;
  while (static_cast<int>(out.size()) < max_len) {
    auto row = row_at(params, w, spec.vocab.size);
    const auto pick = static_cast<Token>(std::max_element(row.begin(), row.end()) - row.begin());
    out.push_back(pick);
    if (pick == spec.vocab.eos) break;
    w.push(pick);
  }
  return out;
}

void accumulate_grad_log_prob(const ModelSpec& spec, const ParamVector& params,
                              const TokenSeq& ctx, const TokenSeq& y,
                              std::span<const double> weights, ParamVector& out) {
  check_params(spec, params);
  if (out.size() != params.size()) throw InputError("gradient buffer dimension mismatch");
  if (weights.size() != y.size()) throw InputError("weights must match completion length");
  check_tokens(spec, ctx, "context");
  check_tokens(spec, y, "completion");
  for (double wgt : weights) {
    if (!std::isfinite(wgt)) throw NumericError("non-finite gradient weight");
  }
  ContextWindow w(spec, ctx);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const std::size_t off = w.offset();
    if (weights[i] != 0.0) {
      // d log softmax(z)_y / dz = onehot(y) - p
      auto p = softmax(row_at(params, w, spec.vocab.size));
      for (std::size_t v = 0; v < p.size(); ++v) out[off + v] -= weights[i] * p[v];
      out[off + static_cast<std::size_t>(y[i])] += weights[i];
    }
    w.push(y[i]);
  }
}

ParamVector grad_log_prob(const ModelSpec& spec, const ParamVector& params, const TokenSeq& ctx,
                          const TokenSeq& y, std::span<const double> weights) {
  ParamVector g(params.size());
  accumulate_grad_log_prob(spec, params, ctx, y, weights, g);
  return g;
}

}  // namespace spear
