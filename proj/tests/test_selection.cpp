#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "support.hpp"
#include "topw/selection.hpp"

namespace topw {
namespace {

using testing::Rng;

ScoredPool pool_of(std::vector<double> probs, std::vector<double> phi) {
  ScoredPool s;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    s.tokens.push_back(static_cast<TokenId>(k));
    s.probs.push_back(probs[k]);
    s.logprobs.push_back(std::log(probs[k]));
    s.potential.push_back(0.0);
    s.phi.push_back(phi[k]);
  }
  return s;
}

std::vector<TokenId> sorted(const SelectionResult& r) { return r.crop.sorted_members(); }

TEST(BruteForce, TwoTokenReference) {
  // J_1 = 1 + 0.6 log 0.7 vs J_2 = 0.7.
  const ScoredPool s = pool_of({0.7, 0.3}, {1.0, 0.0});
  const ObjectiveParams params{1.0, 1.6};
  const BruteForceResult bf = brute_force_s_step(s, params);
  EXPECT_EQ(bf.tokens, (std::vector<TokenId>{0}));
  EXPECT_NEAR(bf.value, 0.78599503363676057, 1e-15);
  const PrefixScan scan = prefix_scan(s, params);
  EXPECT_NEAR(scan.objective[0], 0.78599503363676057, 1e-15);
  EXPECT_NEAR(scan.objective[1], 0.7, 1e-15);
  EXPECT_EQ(scan.best_size, 1u);
}

TEST(BruteForce, SingleTokenAndCap) {
  const ScoredPool one = pool_of({1.0}, {-3.0});
  EXPECT_EQ(brute_force_s_step(one, {}).tokens, (std::vector<TokenId>{0}));
  Rng rng(31);
  EXPECT_THROW(brute_force_s_step(testing::random_scored_pool(rng, kMaxBruteForcePool + 1, 1.0), {}),
               std::length_error);
}

TEST(SStep, PrefixRegimeMatchesBruteForce) {
  Rng rng(32);
  for (int t = 0; t < 300; ++t) {
    const double lambda = testing::uniform(rng, 0, 3);
    const ObjectiveParams params{lambda, lambda + testing::uniform(rng, 1e-3, 3)};
    const ScoredPool s = testing::random_scored_pool(rng, testing::uniform_index(rng, 1, 12), lambda);
    const SelectionResult r = s_step(s, params);
    const BruteForceResult bf = brute_force_s_step(s, params);
    EXPECT_EQ(r.regime, Regime::Prefix);
    EXPECT_NEAR(r.value, bf.value, 1e-9);
    EXPECT_EQ(sorted(r), bf.tokens);
  }
}

TEST(SStep, SingletonRegimeMatchesBruteForce) {
  Rng rng(33);
  for (int t = 0; t < 300; ++t) {
    const double lambda = testing::uniform(rng, 0, 3);
    const ObjectiveParams params{lambda, testing::uniform(rng, 0, lambda)};
    const ScoredPool s = testing::random_scored_pool(rng, testing::uniform_index(rng, 1, 12), lambda);
    const SelectionResult r = s_step(s, params);
    const BruteForceResult bf = brute_force_s_step(s, params);
    EXPECT_EQ(r.regime, Regime::Singleton);
    ASSERT_EQ(r.positions.size(), 1u);
    EXPECT_NEAR(r.value, bf.value, 1e-9);
    const std::size_t k = r.positions[0];
    EXPECT_EQ(r.value, s.phi[k] + params.mass_coefficient() * s.logprobs[k]);
  }
}

TEST(SStep, BoundaryBothBranchesAgree) {
  Rng rng(34);
  for (int t = 0; t < 100; ++t) {
    const double lambda = testing::uniform(rng, 0, 3);
    const ScoredPool s = testing::random_scored_pool(rng, testing::uniform_index(rng, 1, 12), lambda);
    const ObjectiveParams params{lambda, lambda};
    const SelectionResult r = s_step(s, params);
    const PrefixScan scan = prefix_scan(s, params);
    EXPECT_EQ(r.regime, Regime::Singleton);
    EXPECT_EQ(scan.best_size, 1u);
    EXPECT_EQ(r.positions[0], scan.order[0]);
  }
}

TEST(SStep, TieBreakPrefersProbabilityThenTokenId) {
  // Equal phi everywhere: prefix order follows probability, then token id.
  const ScoredPool s = pool_of({0.2, 0.3, 0.3, 0.2}, {0.0, 0.0, 0.0, 0.0});
  EXPECT_EQ(phi_order(s, TieBreak::ProbabilityThenTokenId), (std::vector<std::size_t>{1, 2, 0, 3}));
  // c = 0: every singleton score ties, so probability decides.
  EXPECT_EQ(s_step(s, {1.0, 1.0}).positions, (std::vector<std::size_t>{1}));
  // c < 0 favours the least probable token; the lower id wins the tie.
  EXPECT_EQ(s_step(s, {1.0, 0.5}).positions, (std::vector<std::size_t>{0}));
  EXPECT_THROW(s_step(ScoredPool{}, {}), std::invalid_argument);
}

TEST(BetaSweep, MonotoneAndExtremes) {
  Rng rng(35);
  for (int t = 0; t < 500; ++t) {
    const double lambda = testing::uniform(rng, 0, 3);
    const ScoredPool s = testing::random_scored_pool(rng, testing::uniform_index(rng, 1, 30), lambda);
    std::vector<double> betas(8);
    for (std::size_t k = 0; k < 8; ++k) betas[k] = lambda + 5.0 * double(k) / 7.0;
    const std::vector<double> g = beta_sweep_gammas(s, lambda, betas);
    for (std::size_t k = 1; k < g.size(); ++k) ASSERT_GE(g[k], g[k - 1]);
  }
  const ScoredPool s = testing::random_scored_pool(rng, 10, 1.0);
  const std::vector<double> ends{1.0, 1e9};
  const std::vector<double> g = beta_sweep_gammas(s, 1.0, ends);
  EXPECT_DOUBLE_EQ(g[0], s.probs[phi_order(s, TieBreak::ProbabilityThenTokenId)[0]]);
  EXPECT_NEAR(g[1], 1.0, 1e-12);
  const std::vector<double> flat(4, 2.0);
  const std::vector<double> gf = beta_sweep_gammas(s, 1.0, flat);
  for (const double v : gf) EXPECT_EQ(v, gf[0]);
  EXPECT_THROW(beta_sweep_gammas(s, 1.0, std::vector<double>{0.5}), std::invalid_argument);
  EXPECT_THROW(beta_sweep_gammas(s, 1.0, std::vector<double>{2.0, 1.5}), std::invalid_argument);
}

TEST(ShiftCheck, InvariantUnderConstantShift) {
  Rng rng(36);
  for (int t = 0; t < 200; ++t) {
    const double lambda = testing::uniform(rng, 0, 3);
    const double beta = testing::uniform(rng, 0, 6);
    const ScoredPool s = testing::random_scored_pool(rng, testing::uniform_index(rng, 1, 40), lambda);
    for (const double c : {0.0, -10.0, 3.7, 1e3}) {
      const ShiftCheck r = shift_check(s, {lambda, beta}, TieBreak::ProbabilityThenTokenId, c);
      EXPECT_TRUE(r.ok) << "c=" << c << " shift=" << r.value_shift;
    }
  }
}

// Exhaustive agreement of the bounded evaluation with the plain S-step.
TEST(LazySStep, MatchesFullSStep) {
  Rng rng(37);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t n = testing::uniform_index(rng, 1, 200);
    const double lambda = testing::uniform(rng, 0, 3);
    const double beta = testing::uniform(rng, 0, 6);
    const ObjectiveParams params{lambda, beta};
    ScoredPool s = testing::random_scored_pool(rng, n, lambda, 4.0);
    // Probability order, potentials <= 0 with zeros on a random anchor prefix.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) {
      return s.probs[a] != s.probs[b] ? s.probs[a] > s.probs[b] : s.tokens[a] < s.tokens[b];
    });
    ScoredPool sorted_pool;
    for (const auto k : order) {
      sorted_pool.tokens.push_back(s.tokens[k]);
      sorted_pool.probs.push_back(s.probs[k]);
      sorted_pool.logprobs.push_back(s.logprobs[k]);
      sorted_pool.potential.push_back(-std::abs(s.potential[k]));
    }
    std::vector<std::size_t> known;
    for (std::size_t k = 0; k < n; ++k) {
      if (testing::uniform(rng, 0, 1) < 0.2) {
        known.push_back(k);
        sorted_pool.potential[k] = 0.0;
      }
    }
    for (std::size_t k = 0; k < n; ++k) {
      sorted_pool.phi.push_back(sorted_pool.potential[k] + lambda * sorted_pool.logprobs[k]);
    }
    const std::vector<double> zeros(known.size(), 0.0);
    std::size_t calls = 0;
    const PotentialOracle oracle = [&](std::span<const std::size_t> pos, std::span<double> out) {
      for (std::size_t k = 0; k < pos.size(); ++k) out[k] = sorted_pool.potential[pos[k]];
      ++calls;
    };
    const LazySelection lazy = lazy_s_step(sorted_pool, known, zeros, 0.0, oracle, params);
    const SelectionResult full = s_step(sorted_pool, params);
    ASSERT_EQ(lazy.result.positions, full.positions) << "trial " << t;
    ASSERT_EQ(lazy.result.value, full.value);
    ASSERT_EQ(lazy.result.crop.gamma, full.crop.gamma);
    ASSERT_EQ(lazy.result.regime, full.regime);
    EXPECT_LE(lazy.evaluated, n - known.size());
  }
}

TEST(LazySStep, Validation) {
  const ScoredPool s = pool_of({0.3, 0.7}, {0, 0});
  const PotentialOracle none = [](std::span<const std::size_t>, std::span<double> out) {
    for (auto& v : out) v = 0.0;
  };
  EXPECT_THROW(lazy_s_step(s, {}, {}, 0.0, none, {}), std::invalid_argument);  // not sorted
  const ScoredPool ok = pool_of({0.7, 0.3}, {0, 0});
  const PotentialOracle above = [](std::span<const std::size_t>, std::span<double> out) {
    for (auto& v : out) v = 1.0;
  };
  EXPECT_THROW(lazy_s_step(ok, {}, {}, 0.0, above, {}), std::invalid_argument);
  const std::vector<std::size_t> dup{0, 0};
  const std::vector<double> z{0.0, 0.0};
  EXPECT_THROW(lazy_s_step(ok, dup, z, 0.0, none, {}), std::invalid_argument);
}

}  // namespace
}  // namespace topw
