#pragma once

// Order-2 model over V=6 built so that, from c0 = [0]:
//   win  y+ = [1, 1]     has token probabilities (0.9, 0.9)
//   lose y- = [2, 3, 4]  has token probabilities (0.05, 0.6, 0.8)
// With tau = 2 the lose tail is {1, 2}, i.e. probabilities (0.6, 0.8).

#include <cmath>

#include "spear/model.hpp"
#include "spear/traces.hpp"

namespace worked {

inline spear::ModelSpec spec() {
  spear::ModelSpec s;
  s.vocab.size = 6;
  s.vocab.bos = 0;
  s.vocab.eos = 5;
  s.vocab.sep = 4;
  s.vocab.feedback = 3;
  s.order = 2;
  return s;
}

// Sets row r so that token t has probability p and the rest share 1 - p.
inline void set_row(spear::ParamVector& params, std::size_t r, int t, double p) {
  const std::size_t V = 6;
  for (std::size_t v = 0; v < V; ++v) {
    params[r * V + v] = static_cast<int>(v) == t ? std::log(p) : std::log((1.0 - p) / (V - 1));
  }
}

inline spear::ParamVector params() {
  spear::ParamVector p(36);
  // row 0: p(1) = 0.9, p(2) = 0.05, the other four 0.0125 each
  for (std::size_t v = 0; v < 6; ++v) p[v] = std::log(0.0125);
  p[1] = std::log(0.9);
  p[2] = std::log(0.05);
  set_row(p, 1, 1, 0.9);
  set_row(p, 2, 3, 0.6);
  set_row(p, 3, 4, 0.8);
  return p;
}

inline spear::WinTrace win() { return {{0}, {1, 1}}; }
inline spear::LoseTrace lose(double alpha = 1.0) { return {{0}, {2, 3, 4}, alpha}; }

}  // namespace worked
