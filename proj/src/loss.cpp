#include "spear/loss.hpp"

#include <algorithm>
#include <cmath>

namespace spear {

namespace {

struct LoseTerm {
  double value = 0.0;
  int active = 0;
  int gated_out = 0;
};

// Unlikelihood sum for one lose trace. When `weights` is non-null it receives
// the per-token coefficient of d log p_i in d(-log(1 - p_i)).
LoseTerm lose_term(const ModelSpec& spec, const ParamVector& params, const LoseTrace& trace,
                   double mu, int tau, double floor, std::vector<double>* weights) {
  LoseTerm out;
  const auto probs = token_probs_along(spec, params, trace.context0, trace.completion);
  if (weights) weights->assign(probs.size(), 0.0);
  for (int i : tail_set(static_cast<int>(probs.size()), tau)) {
    const double p = probs[static_cast<std::size_t>(i)];
    if (!(p > mu)) {
      ++out.gated_out;
      continue;
    }
    ++out.active;
    const double q = std::max(1.0 - p, floor);
    out.value += -std::log(q);
    if (weights) (*weights)[static_cast<std::size_t>(i)] = p / q;
  }
  return out;
}

}  // namespace

std::vector<int> tail_set(int completion_len, int tau) {
  if (completion_len < 1) throw InputError("tail_set needs a nonempty completion");
  if (tau < 0) throw InputError("tau must be nonnegative");
  const int k = tau == 0 ? completion_len : std::min(tau, completion_len);
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = completion_len - k + i;
  return idx;
}

double loss_win(const ModelSpec& spec, const ParamVector& params, std::span<const WinTrace> wins) {
  if (wins.empty()) return 0.0;
  double s = 0.0;
  for (const auto& w : wins) s += -seq_log_prob(spec, params, w.context0, w.completion);
  return s / static_cast<double>(wins.size());
}

double loss_lose(const ModelSpec& spec, const ParamVector& params, std::span<const LoseTrace> loses,
                 double mu, int tau, double numeric_floor) {
  if (!(mu > 0.0 && mu < 1.0)) throw InputError("mu must lie strictly inside (0, 1)");
  if (loses.empty()) return 0.0;
  double s = 0.0;
  for (const auto& l : loses) s += l.alpha * lose_term(spec, params, l, mu, tau, numeric_floor, nullptr).value;
  return s / static_cast<double>(loses.size());
}

namespace {

LossBreakdown evaluate(const ModelSpec& spec, const ParamVector& params, const TraceSets& traces,
                       const SpearHyper& hyper, ParamVector* grad) {
  hyper.validate();
  LossBreakdown out;
  if (!traces.wins.empty()) {
    const double scale = 1.0 / static_cast<double>(traces.wins.size());
    double s = 0.0;
    std::vector<double> w;
    for (const auto& win : traces.wins) {
      s += -seq_log_prob(spec, params, win.context0, win.completion);
      if (grad) {
        w.assign(win.completion.size(), -hyper.lambda_w * scale);
        accumulate_grad_log_prob(spec, params, win.context0, win.completion, w, *grad);
      }
    }
    out.win_loss = s * scale;
  }
  if (!traces.loses.empty()) {
    const double scale = 1.0 / static_cast<double>(traces.loses.size());
    double s = 0.0;
    std::vector<double> w;
    for (const auto& lose : traces.loses) {
      const auto term = lose_term(spec, params, lose, hyper.mu, hyper.tau, hyper.numeric_floor,
                                  grad ? &w : nullptr);
      s += lose.alpha * term.value;
      out.active_token_count += term.active;
      out.gated_out_count += term.gated_out;
      if (grad && term.active > 0 && hyper.lambda_l != 0.0) {
        for (auto& v : w) v *= hyper.lambda_l * lose.alpha * scale;
        accumulate_grad_log_prob(spec, params, lose.context0, lose.completion, w, *grad);
      }
    }
    out.lose_loss = s * scale;
  }
  out.total = hyper.lambda_w * out.win_loss + hyper.lambda_l * out.lose_loss;
  return out;
}

}  // namespace

LossBreakdown loss_spear(const ModelSpec& spec, const ParamVector& params, const TraceSets& traces,
                         const SpearHyper& hyper) {
  return evaluate(spec, params, traces, hyper, nullptr);
}

LossBreakdown loss_and_grad_spear(const ModelSpec& spec, const ParamVector& params,
                                  const TraceSets& traces, const SpearHyper& hyper, ParamVector& grad) {
  if (grad.size() != params.size()) {
    grad = ParamVector(params.size());
  } else {
    std::fill(grad.values().begin(), grad.values().end(), 0.0);
  }
  return evaluate(spec, params, traces, hyper, &grad);
}

ParamVector grad_spear(const ModelSpec& spec, const ParamVector& params, const TraceSets& traces,
                       const SpearHyper& hyper) {
  ParamVector g(params.size());
  evaluate(spec, params, traces, hyper, &g);
  return g;
}

}  // namespace spear
