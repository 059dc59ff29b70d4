#pragma once

namespace spear {

// Hyperparameters of the two-phase client procedure.
struct SpearHyper {
  double lambda_w = 1.0;
  double lambda_l = 0.1;
  double mu = 0.3;          // confidence gate, strict p > mu
  int tau = 0;              // tail length; 0 targets the whole completion
  int max_revisions = 2;    // N
  double temperature = 0.8; // sampling only; losses use temperature 1
  double numeric_floor = 1e-12;

  void validate() const;
};

// Knobs of the synthetic interaction loop that have no counterpart in the
// loss.
struct InteractionConfig {
  double hint_ratio = 0.5;
  int max_completion_len = 8;

  void validate() const;
};

}  // namespace spear
