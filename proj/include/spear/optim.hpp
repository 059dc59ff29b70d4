#pragma once

#include <cstdint>

#include "spear/model.hpp"

namespace spear {

struct OptimConfig {
  double base_lr = 5e-5;
  double min_lr = 1e-5;
  double warmup_ratio = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.01;
  double epsilon = 1e-8;
  // Keep client moments between rounds instead of resetting them.
  bool persist_state = false;

  void validate() const;
};

// AdamW state. Values are threaded explicitly through step(); nothing is
// mutated in place.
struct OptimState {
  OptimConfig config;
  ParamVector first_moment;
  ParamVector second_moment;
  std::int64_t step_count = 0;       // updates applied since the moments were reset
  std::int64_t schedule_offset = 0;  // schedule position at the last reset
  std::int64_t total_steps = 1;

  static OptimState fresh(const OptimConfig& config, std::size_t dim, std::int64_t total_steps);
};

// Linear warmup from 0 to base_lr over warmup_ratio * total_steps steps, then
// cosine decay to min_lr at total_steps.
double lr_at(const OptimState& state, std::int64_t step);

struct StepResult {
  ParamVector params;
  OptimState state;
};

// One AdamW update. Update number k (1-based) since the reset uses
// lr_at(schedule_offset + k), clamped to total_steps; bias correction uses k.
StepResult step(const OptimState& state, const ParamVector& params, const ParamVector& grad,
                bool apply_weight_decay = true);

// In-place variant used by the trainer; same arithmetic as step().
void step_inplace(OptimState& state, ParamVector& params, const ParamVector& grad,
                  bool apply_weight_decay = true);

}  // namespace spear
