#include "spear/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace spear {

void OptimConfig::validate() const {
  if (!(base_lr > 0.0)) throw InputError("base_lr must be positive");
  if (!(min_lr > 0.0) || min_lr > base_lr) throw InputError("min_lr must lie in (0, base_lr]");
  if (!(warmup_ratio >= 0.0 && warmup_ratio < 1.0)) throw InputError("warmup_ratio must lie in [0, 1)");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw InputError("beta1 and beta2 must lie in [0, 1)");
  }
  if (!(weight_decay >= 0.0)) throw InputError("weight_decay must be nonnegative");
  if (!(epsilon > 0.0)) throw InputError("epsilon must be positive");
}

OptimState OptimState::fresh(const OptimConfig& config, std::size_t dim, std::int64_t total_steps) {
  config.validate();
  if (total_steps < 1) throw InputError("total_steps must be >= 1");
  OptimState s;
  s.config = config;
  s.first_moment = ParamVector(dim);
  s.second_moment = ParamVector(dim);
  s.total_steps = total_steps;
  return s;
}

double lr_at(const OptimState& state, std::int64_t step) {
  if (step < 0 || step > state.total_steps) {
    throw InputError("step " + std::to_string(step) + " outside [0, " +
                     std::to_string(state.total_steps) + "]");
  }
  const auto& c = state.config;
  const double warmup = c.warmup_ratio * static_cast<double>(state.total_steps);
  const double s = static_cast<double>(step);
  if (s < warmup) return c.base_lr * s / warmup;
  const double span = static_cast<double>(state.total_steps) - warmup;
  if (span <= 0.0) return c.base_lr;
  const double progress = (s - warmup) / span;
  return c.min_lr + (c.base_lr - c.min_lr) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void step_inplace(OptimState& state, ParamVector& params, const ParamVector& grad,
                  bool apply_weight_decay) {
  const auto n = params.size();
  if (grad.size() != n || state.first_moment.size() != n || state.second_moment.size() != n) {
    throw InputError("optimizer dimension mismatch");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(grad[i])) {
      throw NumericError("non-finite gradient entry at index " + std::to_string(i));
    }
  }
  const auto& c = state.config;
  const std::int64_t t = state.step_count + 1;
  const double lr = lr_at(state, std::min(state.schedule_offset + t, state.total_steps));
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
  const double decay = apply_weight_decay ? 1.0 - lr * c.weight_decay : 1.0;
  auto& m = state.first_moment;
  auto& v = state.second_moment;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    // Untouched entry: the moment terms are exactly zero, only decay applies.
    if (g == 0.0 && m[i] == 0.0 && v[i] == 0.0) {
      params[i] *= decay;
      continue;
    }
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    params[i] = params[i] * decay - lr * mhat / (std::sqrt(vhat) + c.epsilon);
  }
  state.step_count = t;
}

StepResult step(const OptimState& state, const ParamVector& params, const ParamVector& grad,
                bool apply_weight_decay) {
  StepResult r{params, state};
  step_inplace(r.state, r.params, grad, apply_weight_decay);
  return r;
}

}  // namespace spear
