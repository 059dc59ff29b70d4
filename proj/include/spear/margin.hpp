#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "spear/hyper.hpp"
#include "spear/model.hpp"
#include "spear/traces.hpp"

namespace spear {

// Confidence-amplified margin constant: log 4 for mu <= 1/2, and
// log(1 / (mu (1 - mu))) above.
double h_mu(double mu);

// h(mu) without the log 4 plateau. Only used to check that the audit catches
// a wrong constant.
double h_mu_without_plateau(double mu);

using MarginConstant = std::function<double(double)>;

// Mean log-prob per win token minus mean log-prob over the lose tail set.
double margin(const ModelSpec& spec, const ParamVector& params, const TokenSeq& c0,
              const TokenSeq& y_plus, const TokenSeq& y_minus, int tau);

// h(mu) - eps * (1 / (lambda_w |y+|) + 1 / (lambda_l alpha |T|)).
double margin_bound(double epsilon, const SpearHyper& hyper, double alpha, int win_len,
                    int tail_size, const MarginConstant& h = h_mu);

struct MarginReport {
  bool applicable = false;  // both completions nonempty and contexts shared
  bool tail_above_gate = false;
  double margin = 0.0;
  double epsilon = 0.0;
  double bound_rhs = 0.0;
  double slack = 0.0;  // margin - bound_rhs
  int win_len = 0;
  int tail_size = 0;
  double alpha = 0.0;
  double mu = 0.0;
  int tau = 0;
  double lambda_w = 0.0;
  double lambda_l = 0.0;
};

MarginReport check_theorem(const ModelSpec& spec, const ParamVector& params, const WinTrace& win,
                           const LoseTrace& lose, const SpearHyper& hyper,
                           const MarginConstant& h = h_mu);

// -log(1 - p) >= log p + h(mu), allowing -1e-12 of rounding slack.
bool lemma_holds(double mu, double p, const MarginConstant& h = h_mu);
double lemma_slack(double mu, double p, const MarginConstant& h = h_mu);

struct LemmaAudit {
  std::int64_t points = 0;
  std::int64_t violations = 0;
  double worst_slack = 0.0;
  double worst_mu = 0.0;
  double worst_p = 0.0;
};

// mu over {0.05, 0.10, ..., 0.95}; p over the grid k / 1000 strictly inside
// (mu, 1).
LemmaAudit audit_lemma_grid(const MarginConstant& h = h_mu);

// Minimum slack over the p grid for one mu, and where it is attained.
struct LemmaMinimum {
  double slack = 0.0;
  double p = 0.0;
};
LemmaMinimum lemma_grid_minimum(double mu, const MarginConstant& h = h_mu);

struct TheoremInstance {
  std::int64_t id = 0;
  int vocab = 8;
  int order = 2;
  SpearHyper hyper;
  double alpha = 1.0;
  std::int64_t rejected = 0;  // draws discarded before every tail token cleared the gate
  MarginReport report;
};

struct TheoremAudit {
  std::vector<TheoremInstance> instances;
  std::int64_t violations = 0;
  double worst_slack = 0.0;
};

// Random small-model pairs: V = 8, order 2-3, parameters uniform in [-3, 3],
// completions of length 2-6 sampled from the model, rejection-sampled until
// every tail token clears the gate. Instance i uses alpha, mu, tau from the grid
// {0.5, 1.0} x {0.3, 0.7} x {0, 2} in round-robin order.
TheoremInstance draw_theorem_instance(std::int64_t id, std::uint64_t seed,
                                      const MarginConstant& h = h_mu);
TheoremAudit audit_theorem(int instances, std::uint64_t seed, const MarginConstant& h = h_mu,
                           int workers = 1);

// Tolerance on theorem slack.
inline constexpr double kTheoremSlackTol = -1e-9;
inline constexpr double kLemmaSlackTol = -1e-12;

}  // namespace spear
