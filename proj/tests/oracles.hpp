#pragma once

// Reference computations written from the definitions, without going through
// the library's rolling window or closed-form gradients.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "spear/model.hpp"

namespace oracle {

using spear::ModelSpec;
using spear::ParamVector;
using spear::Token;
using spear::TokenSeq;

// Row of the logit table for ctx, via explicit BOS padding.
inline std::vector<double> row(const ModelSpec& spec, const ParamVector& p, const TokenSeq& ctx) {
  const int k = spec.order - 1;
  TokenSeq padded(static_cast<std::size_t>(k), spec.vocab.bos);
  padded.insert(padded.end(), ctx.begin(), ctx.end());
  std::size_t r = 0;
  for (std::size_t i = padded.size() - static_cast<std::size_t>(k); i < padded.size(); ++i) {
    r = r * static_cast<std::size_t>(spec.vocab.size) + static_cast<std::size_t>(padded[i]);
  }
  const auto V = static_cast<std::size_t>(spec.vocab.size);
  return {p.raw().begin() + static_cast<std::ptrdiff_t>(r * V),
          p.raw().begin() + static_cast<std::ptrdiff_t>((r + 1) * V)};
}

inline std::vector<double> probs(const std::vector<double>& z, double T = 1.0) {
  double m = z[0];
  for (double v : z) m = std::max(m, v);
  std::vector<double> out(z.size());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += (out[i] = std::exp((z[i] - m) / T));
  for (auto& v : out) v /= s;
  return out;
}

// p(y_i | ctx, y_<i) for each i.
inline std::vector<double> token_probs(const ModelSpec& spec, const ParamVector& p, TokenSeq ctx,
                                       const TokenSeq& y) {
  std::vector<double> out;
  for (Token t : y) {
    out.push_back(probs(row(spec, p, ctx))[static_cast<std::size_t>(t)]);
    ctx.push_back(t);
  }
  return out;
}

inline double log_prob(const ModelSpec& spec, const ParamVector& p, const TokenSeq& ctx, const TokenSeq& y) {
  double s = 0.0;
  for (double q : token_probs(spec, p, ctx, y)) s += std::log(q);
  return s;
}

// Central differences of f at p, one coordinate at a time.
inline ParamVector central_diff(const std::function<double(const ParamVector&)>& f, const ParamVector& p,
                                double h = 1e-5) {
  ParamVector g(p.size());
  ParamVector q = p;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double x = q[i];
    q[i] = x + h;
    const double up = f(q);
    q[i] = x - h;
    const double down = f(q);
    q[i] = x;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// max_i |a_i - b_i| / max(1, |b_i|). Scaled this way so coordinates whose true
// derivative is ~0 do not blow up the ratio.
inline double max_rel_err(const ParamVector& a, const ParamVector& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(b[i])));
  }
  return worst;
}

inline ParamVector random_params(std::size_t dim, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  ParamVector p(dim);
  for (auto& v : p.values()) v = u(rng);
  return p;
}

inline TokenSeq random_seq(int len, int vocab, std::mt19937_64& rng) {
  std::uniform_int_distribution<Token> t(0, vocab - 1);
  TokenSeq s(static_cast<std::size_t>(len));
  for (auto& v : s) v = t(rng);
  return s;
}

inline ModelSpec small_spec(int vocab, int order) {
  ModelSpec s;
  s.vocab.size = vocab;
  s.order = order;
  s.max_seq_len = 64;
  return s;
}

}  // namespace oracle
