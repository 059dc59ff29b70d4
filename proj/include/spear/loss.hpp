#pragma once

#include <span>
#include <vector>

#include "spear/hyper.hpp"
#include "spear/model.hpp"
#include "spear/traces.hpp"

namespace spear {

struct LossBreakdown {
  double win_loss = 0.0;
  double lose_loss = 0.0;
  double total = 0.0;  // lambda_w * win_loss + lambda_l * lose_loss
  int active_token_count = 0;
  int gated_out_count = 0;
};

// Positions targeted by the unlikelihood term: the last min(tau, len)
// indices, or every index when tau == 0.
std::vector<int> tail_set(int completion_len, int tau);

// Mean over wins of the completion NLL. Empty set -> 0.
double loss_win(const ModelSpec& spec, const ParamVector& params, std::span<const WinTrace> wins);

// Mean over loses of alpha * sum_{i in tail, p_i > mu} -log(max(1 - p_i, floor)).
double loss_lose(const ModelSpec& spec, const ParamVector& params, std::span<const LoseTrace> loses,
                 double mu, int tau, double numeric_floor = 1e-12);

LossBreakdown loss_spear(const ModelSpec& spec, const ParamVector& params, const TraceSets& traces,
                         const SpearHyper& hyper);

// Gradient of loss_spear with the gate indicator and alpha held constant.
ParamVector grad_spear(const ModelSpec& spec, const ParamVector& params, const TraceSets& traces,
                       const SpearHyper& hyper);

// Loss and gradient in one pass over the traces.
LossBreakdown loss_and_grad_spear(const ModelSpec& spec, const ParamVector& params,
                                  const TraceSets& traces, const SpearHyper& hyper, ParamVector& grad);

}  // namespace spear
