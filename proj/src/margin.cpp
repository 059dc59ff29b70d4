#include "spear/margin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <thread>

#include "spear/loss.hpp"

namespace spear {

namespace {

void check_mu(double mu) {
  if (!(mu > 0.0 && mu < 1.0)) throw InputError("mu must lie strictly inside (0, 1)");
}

}  // namespace

double h_mu(double mu) {
  check_mu(mu);
  if (mu <= 0.5) return std::log(4.0);
  return -std::log(mu * (1.0 - mu));
}

double h_mu_without_plateau(double mu) {
  check_mu(mu);
  return -std::log(mu * (1.0 - mu));
}

double margin(const ModelSpec& spec, const ParamVector& params, const TokenSeq& c0,
              const TokenSeq& y_plus, const TokenSeq& y_minus, int tau) {
  if (y_plus.empty() || y_minus.empty()) throw InputError("margin needs nonempty completions");
  const double win_avg = seq_log_prob(spec, params, c0, y_plus) / static_cast<double>(y_plus.size());
  const auto lp = token_log_probs_along(spec, params, c0, y_minus);
  const auto tail = tail_set(static_cast<int>(lp.size()), tau);
  double s = 0.0;
  for (int i : tail) s += lp[static_cast<std::size_t>(i)];
  return win_avg - s / static_cast<double>(tail.size());
}

double margin_bound(double epsilon, const SpearHyper& hyper, double alpha, int win_len,
                    int tail_size, const MarginConstant& h) {
  if (win_len < 1 || tail_size < 1) throw InputError("win_len and tail_size must be >= 1");
  if (!(alpha > 0.0)) throw InputError("alpha must be positive");
  if (!(hyper.lambda_w > 0.0) || !(hyper.lambda_l > 0.0)) {
    throw InputError("margin bound is undefined for zero loss weights");
  }
  const double coeff = 1.0 / (hyper.lambda_w * win_len) + 1.0 / (hyper.lambda_l * alpha * tail_size);
  return h(hyper.mu) - epsilon * coeff;
}

MarginReport check_theorem(const ModelSpec& spec, const ParamVector& params, const WinTrace& win,
                           const LoseTrace& lose, const SpearHyper& hyper, const MarginConstant& h) {
  MarginReport r;
  r.alpha = lose.alpha;
  r.mu = hyper.mu;
  r.tau = hyper.tau;
  r.lambda_w = hyper.lambda_w;
  r.lambda_l = hyper.lambda_l;
  r.win_len = static_cast<int>(win.completion.size());
  if (win.completion.empty() || lose.completion.empty() || win.context0 != lose.context0) return r;
  r.applicable = true;

  const auto probs = token_probs_along(spec, params, lose.context0, lose.completion);
  const auto tail = tail_set(static_cast<int>(probs.size()), hyper.tau);
  r.tail_size = static_cast<int>(tail.size());
  r.tail_above_gate = std::all_of(tail.begin(), tail.end(), [&](int i) {
    return probs[static_cast<std::size_t>(i)] > hyper.mu;
  });

  TraceSets pair{{win}, {lose}};
  r.epsilon = loss_spear(spec, params, pair, hyper).total;
  r.margin = margin(spec, params, win.context0, win.completion, lose.completion, hyper.tau);
  r.bound_rhs = margin_bound(r.epsilon, hyper, lose.alpha, r.win_len, r.tail_size, h);
  r.slack = r.margin - r.bound_rhs;
  return r;
}

double lemma_slack(double mu, double p, const MarginConstant& h) {
  check_mu(mu);
  if (!(p > mu && p < 1.0)) throw InputError("lemma requires mu < p < 1");
  return -std::log1p(-p) - std::log(p) - h(mu);
}

bool lemma_holds(double mu, double p, const MarginConstant& h) {
  return lemma_slack(mu, p, h) >= kLemmaSlackTol;
}

LemmaMinimum lemma_grid_minimum(double mu, const MarginConstant& h) {
  LemmaMinimum best{std::numeric_limits<double>::infinity(), 0.0};
  for (int k = 1; k < 1000; ++k) {
    const double p = k / 1000.0;
    if (!(p > mu)) continue;
    const double s = lemma_slack(mu, p, h);
    if (s < best.slack) best = {s, p};
  }
  return best;
}

LemmaAudit audit_lemma_grid(const MarginConstant& h) {
  LemmaAudit a;
  a.worst_slack = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 19; ++i) {
    const double mu = i * 5 / 100.0;
    for (int k = i * 50 + 1; k < 1000; ++k) {
      const double p = k / 1000.0;
      const double s = lemma_slack(mu, p, h);
      ++a.points;
      if (s < kLemmaSlackTol) ++a.violations;
      if (s < a.worst_slack) {
        a.worst_slack = s;
        a.worst_mu = mu;
        a.worst_p = p;
      }
    }
  }
  return a;
}

TheoremInstance draw_theorem_instance(std::int64_t id, std::uint64_t seed, const MarginConstant& h) {
  static constexpr double kAlphas[] = {kAlphaFailed, kAlphaCorrected};
  static constexpr double kMus[] = {0.3, 0.7};
  static constexpr int kTaus[] = {0, 2};

  TheoremInstance inst;
  inst.id = id;
  const auto combo = static_cast<std::size_t>(id % 8);
  inst.alpha = kAlphas[combo % 2];
  inst.hyper.mu = kMus[(combo / 2) % 2];
  inst.hyper.tau = kTaus[(combo / 4) % 2];

  std::mt19937_64 rng(derive_seed({seed, static_cast<std::uint64_t>(id)}));
  std::uniform_real_distribution<double> theta(-3.0, 3.0);
  std::uniform_real_distribution<double> log_lambda(std::log(0.05), std::log(2.0));
  std::uniform_int_distribution<int> order_dist(2, 3);
  std::uniform_int_distribution<int> len_dist(2, 6);
  std::uniform_int_distribution<int> ctx_len(1, 3);
  inst.hyper.lambda_w = std::exp(log_lambda(rng));
  inst.hyper.lambda_l = std::exp(log_lambda(rng));

  ModelSpec spec;
  spec.vocab.size = inst.vocab;
  spec.max_seq_len = 16;
  std::uniform_int_distribution<Token> tok(0, inst.vocab - 1);

  for (;;) {
    inst.order = order_dist(rng);
    spec.order = inst.order;
    ParamVector params(spec.param_dim());
    for (auto& v : params.values()) v = theta(rng);

    TokenSeq c0(static_cast<std::size_t>(ctx_len(rng)));
    for (auto& t : c0) t = tok(rng);
    TokenSeq y_plus(static_cast<std::size_t>(len_dist(rng)));
    for (auto& t : y_plus) t = tok(rng);

    // The lose completion is a temperature-1 sample of fixed length, the way
    // an initial generation would be drawn; EOS is an ordinary token here.
    const int lose_len = len_dist(rng);
    TokenSeq y_minus;
    ContextWindow w(spec, c0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < lose_len; ++i) {
      const auto row = params.values().subspan(w.offset(), static_cast<std::size_t>(inst.vocab));
      const auto p = softmax(row);
      double u = unif(rng), acc = 0.0;
      Token pick = static_cast<Token>(inst.vocab - 1);
      for (std::size_t v = 0; v < p.size(); ++v) {
        acc += p[v];
        if (u < acc) {
          pick = static_cast<Token>(v);
          break;
        }
      }
      y_minus.push_back(pick);
      w.push(pick);
    }

    const WinTrace win{c0, y_plus};
    const LoseTrace lose{c0, y_minus, inst.alpha};
    auto report = check_theorem(spec, params, win, lose, inst.hyper, h);
    if (report.tail_above_gate) {
      inst.report = report;
      return inst;
    }
    ++inst.rejected;
  }
}

TheoremAudit audit_theorem(int instances, std::uint64_t seed, const MarginConstant& h, int workers) {
  if (instances < 1) throw InputError("theorem audit needs at least one instance");
  TheoremAudit audit;
  audit.instances.resize(static_cast<std::size_t>(instances));
  workers = std::clamp(workers, 1, instances);
  auto run = [&](int start) {
    for (int i = start; i < instances; i += workers) {
      audit.instances[static_cast<std::size_t>(i)] = draw_theorem_instance(i, seed, h);
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(run, t);
  }
  audit.worst_slack = std::numeric_limits<double>::infinity();
  for (const auto& inst : audit.instances) {
    if (inst.report.slack < kTheoremSlackTol) ++audit.violations;
    audit.worst_slack = std::min(audit.worst_slack, inst.report.slack);
  }
  return audit;
}

}  // namespace spear
