#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "spear/loss.hpp"
#include "spear/margin.hpp"
#include "worked_pair.hpp"

using namespace spear;

TEST_CASE("h_mu") {
  CHECK(std::abs(h_mu(0.5) - std::log(4.0)) < 1e-12);
  CHECK(std::abs(h_mu(0.5) - 1.3862944) < 1e-7);
  CHECK(h_mu(0.3) == h_mu(0.5));
  CHECK(std::abs(h_mu(0.9) - std::log(1.0 / 0.09)) < 1e-12);
  CHECK(std::abs(h_mu(0.9) - 2.4079456) < 1e-7);
  CHECK(std::abs(h_mu(0.999) - 6.909) < 1e-3);
  CHECK_THROWS_AS(h_mu(0.0), InputError);
  CHECK_THROWS_AS(h_mu(1.0), InputError);
  CHECK_THROWS_AS(h_mu(-0.2), InputError);
}

TEST_CASE("property: h plateau, continuity and growth") {
  for (int i = 1; i <= 500; ++i) CHECK(h_mu(i / 1000.0) == std::log(4.0));
  CHECK(std::abs(h_mu(0.5 + 1e-9) - std::log(4.0)) < 1e-12);
  double prev = h_mu(0.5);
  for (int i = 501; i < 1000; ++i) {
    const double cur = h_mu(i / 1000.0);
    CHECK(cur > prev);
    prev = cur;
  }
  // f(p) = -log(p (1 - p)) is smallest at p = 1/2 with value log 4
  double best = 1e300, arg = 0.0;
  for (int k = 1; k < 1000; ++k) {
    const double p = k / 1000.0;
    const double f = -std::log(p * (1 - p));
    if (f < best) best = f, arg = p;
  }
  CHECK(arg == 0.5);
  CHECK(std::abs(best - std::log(4.0)) < 1e-15);
}

TEST_CASE("margin") {
  const auto spec = worked::spec();
  const auto p = worked::params();
  SUBCASE("worked pair") {
    const double want = std::log(0.9) - (std::log(0.6) + std::log(0.8)) / 2;
    const double m = margin(spec, p, {0}, {1, 1}, {2, 3, 4}, 2);
    CHECK(std::abs(m - want) < 1e-12);
    CHECK(std::abs(m - 0.26162) < 1e-5);
  }
  SUBCASE("self margin with tau 0 is zero") {
    std::mt19937_64 rng(2);
    const auto s = oracle::small_spec(6, 3);
    for (int i = 0; i < 50; ++i) {
      const auto q = oracle::random_params(s.param_dim(), rng, 2.0);
      const auto y = oracle::random_seq(1 + i % 5, 6, rng);
      CHECK(margin(s, q, {0, 3}, y, y, 0) == 0.0);
    }
  }
  SUBCASE("raising a lose-token probability lowers the margin") {
    double prev = margin(spec, p, {0}, {1, 1}, {2, 3, 4}, 2);
    for (double q : {0.65, 0.7, 0.8, 0.9, 0.99}) {
      auto raised = p;
      worked::set_row(raised, 2, 3, q);
      const double m = margin(spec, raised, {0}, {1, 1}, {2, 3, 4}, 2);
      CHECK(m < prev);
      prev = m;
    }
  }
  SUBCASE("matches the oracle on random pairs") {
    std::mt19937_64 rng(8);
    const auto s = oracle::small_spec(5, 2);
    for (int i = 0; i < 50; ++i) {
      const auto q = oracle::random_params(s.param_dim(), rng, 2.0);
      const auto yp = oracle::random_seq(1 + i % 4, 5, rng);
      const auto ym = oracle::random_seq(1 + i % 6, 5, rng);
      const int tau = i % 3;
      const auto lp = oracle::token_probs(s, q, {0}, ym);
      const int n = static_cast<int>(lp.size());
      const int k = tau == 0 ? n : std::min(tau, n);
      double tail = 0.0;
      for (int j = n - k; j < n; ++j) tail += std::log(lp[static_cast<std::size_t>(j)]);
      const double want = oracle::log_prob(s, q, {0}, yp) / static_cast<double>(yp.size()) - tail / k;
      CHECK(margin(s, q, {0}, yp, ym, tau) == doctest::Approx(want).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(margin(spec, p, {0}, {}, {2}, 0), InputError);
  CHECK_THROWS_AS(margin(spec, p, {0}, {1}, {}, 0), InputError);
}

TEST_CASE("margin_bound") {
  SpearHyper h;
  CHECK(margin_bound(0.0, h, 1.0, 2, 2) == h_mu(0.3));
  const double rhs = margin_bound(0.46329, h, 1.0, 2, 2);
  CHECK(std::abs(rhs - (std::log(4.0) - 0.46329 * (0.5 + 5.0))) < 1e-12);
  CHECK(std::abs(rhs - (-1.1618)) < 1e-4);

  for (double eps : {0.1, 1.0, 3.0}) {
    for (int n = 1; n < 8; ++n) {
      CHECK(margin_bound(eps, h, 1.0, 2, n + 1) >= margin_bound(eps, h, 1.0, 2, n));
      CHECK(margin_bound(eps, h, 1.0, n + 1, 2) >= margin_bound(eps, h, 1.0, n, 2));
    }
    CHECK(margin_bound(eps, h, 1.0, 3, 3) >= margin_bound(eps, h, 0.5, 3, 3));
  }
  auto zero = h;
  zero.lambda_l = 0.0;
  CHECK_THROWS_AS(margin_bound(1.0, zero, 1.0, 2, 2), InputError);
  CHECK_THROWS_AS(margin_bound(1.0, h, 0.0, 2, 2), InputError);
  CHECK_THROWS_AS(margin_bound(1.0, h, 1.0, 0, 2), InputError);
}

TEST_CASE("check_theorem") {
  const auto spec = worked::spec();
  const auto p = worked::params();
  SpearHyper h;
  h.tau = 2;

  SUBCASE("worked pair") {
    const auto r = check_theorem(spec, p, worked::win(), worked::lose(), h);
    CHECK(r.applicable);
    CHECK(r.tail_above_gate);
    CHECK(r.tail_size == 2);
    CHECK(r.win_len == 2);
    CHECK(r.epsilon == doctest::Approx(loss_spear(spec, p, {{worked::win()}, {worked::lose()}}, h).total));
    CHECK(r.slack == doctest::Approx(r.margin - r.bound_rhs));
    CHECK(r.slack >= -1e-9);
  }
  SUBCASE("a gated-out tail token breaks the assumption") {
    h.tau = 3;  // pulls in the first lose token, p = 0.05
    const auto r = check_theorem(spec, p, worked::win(), worked::lose(), h);
    CHECK(r.applicable);
    CHECK_FALSE(r.tail_above_gate);
  }
  SUBCASE("not applicable without a shared context") {
    const LoseTrace other{{1}, {2, 3}, 1.0};
    CHECK_FALSE(check_theorem(spec, p, worked::win(), other, h).applicable);
  }
}

TEST_CASE("check_theorem: near-tight instance") {
  // Win tokens at 1 - 1e-9, the single tail token at exactly 1/2 where the
  // lemma is an equality for mu < 1/2, and lambda_w large so the win part of
  // eps barely counts. The slack works out to about 5.5e-5.
  const auto spec = worked::spec();
  ParamVector p(spec.param_dim());
  worked::set_row(p, 0, 1, 1.0 - 1e-9);
  worked::set_row(p, 1, 1, 1.0 - 1e-9);
  worked::set_row(p, 2, 3, 0.5);
  SpearHyper h;
  h.lambda_w = 1000.0;
  h.lambda_l = 0.1;
  h.tau = 1;
  const WinTrace w{{0}, {1, 1}};
  const LoseTrace l{{0}, {2, 3}, 1.0};
  const auto r = check_theorem(spec, p, w, l, h);
  REQUIRE(r.applicable);
  CHECK(r.tail_above_gate);
  CHECK(r.tail_size == 1);
  const double eps = -1000.0 * 2 * std::log(1.0 - 1e-9) + 0.1 * std::log(2.0);
  const double want = std::log(1.0 - 1e-9) - std::log(0.5) - std::log(4.0) + eps * (1.0 / 2000.0 + 1.0 / 0.1);
  CHECK(r.slack == doctest::Approx(want).epsilon(1e-6));
  CHECK(r.slack + 1e-9 >= 0.0);
  CHECK(r.slack < 1e-3);
}

TEST_CASE("lemma") {
  CHECK(std::abs(lemma_slack(0.3, 0.5)) < 1e-12);
  CHECK(lemma_holds(0.3, 0.5));
  CHECK(lemma_slack(0.7, 0.700001) >= 0.0);
  CHECK(lemma_slack(0.7, 0.700001) < 1e-4);
  CHECK_THROWS_AS(lemma_slack(0.3, 0.3), InputError);
  CHECK_THROWS_AS(lemma_slack(0.3, 1.0), InputError);
  CHECK_THROWS_AS(lemma_slack(0.0, 0.5), InputError);

  const auto a = audit_lemma_grid();
  CHECK(a.violations == 0);
  CHECK(a.worst_slack >= -1e-12);
  const auto m = lemma_grid_minimum(0.3);
  CHECK(m.p == 0.5);
  CHECK(m.slack < 1e-6);
}

TEST_CASE("lemma audit catches a wrong constant") {
  const auto a = audit_lemma_grid(h_mu_without_plateau);
  CHECK(a.violations > 0);
  CHECK(a.worst_slack < -1e-3);
  CHECK(a.worst_mu < 0.5);
}

TEST_CASE("theorem audit") {
  const auto a = audit_theorem(200, 3);
  CHECK(a.instances.size() == 200);
  CHECK(a.violations == 0);
  CHECK(a.worst_slack >= kTheoremSlackTol);
  for (const auto& inst : a.instances) {
    CHECK(inst.report.tail_above_gate);
    CHECK(inst.report.applicable);
    CHECK(inst.vocab == 8);
    CHECK((inst.order == 2 || inst.order == 3));
    CHECK(inst.report.win_len >= 2);
    CHECK(inst.report.win_len <= 6);
  }
  const auto b = audit_theorem(200, 3, h_mu, 4);
  for (std::size_t i = 0; i < 200; ++i) CHECK(b.instances[i].report.slack == a.instances[i].report.slack);
  CHECK_THROWS_AS(audit_theorem(0, 1), InputError);
}
