#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "topw/objective.hpp"
#include "topw/transport.hpp"

namespace topw {
namespace {

using testing::Rng;

Dist dist(std::vector<double> p) { return Dist::from_probs(std::move(p)); }

TEST(EvalF, FullVocabularyIsScaledEntropy) {
  Rng rng(21);
  const TokenMetric m = testing::random_metric(rng, 6);
  const Dist p = testing::random_dist(rng, 6);
  const ObjectiveParams params{1.3, 2.0};
  const auto all = testing::iota_tokens(6);
  EXPECT_NEAR(eval_F_exact(p, all, params, m), 1.3 * entropy(p), 1e-12);
  EXPECT_NEAR(eval_F_expanded(p, all, params, m), 1.3 * entropy(p), 1e-12);
}

TEST(EvalF, SingletonDropsEntropy) {
  Rng rng(22);
  const TokenMetric m = testing::random_metric(rng, 6);
  const Dist p = testing::random_dist(rng, 6);
  const ObjectiveParams params{1.3, 2.0};
  for (TokenId i = 0; i < 6; ++i) {
    std::vector<double> one_hot(6, 0.0);
    one_hot[i] = 1.0;
    const double expected = w1_exact(p, dist(one_hot), m).value - 2.0 * std::log(p.prob(i));
    EXPECT_NEAR(eval_F_exact(p, std::vector<TokenId>{i}, params, m), expected, 1e-12);
  }
}

TEST(EvalF, ExactAndExpandedAgree) {
  Rng rng(23);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = testing::uniform_index(rng, 1, 8);
    const TokenMetric m = testing::random_metric(rng, n);
    const Dist p = testing::random_dist(rng, n);
    const ObjectiveParams params{testing::uniform(rng, 0, 3), testing::uniform(rng, 0, 5)};
    const auto s = testing::random_subset(rng, n);
    EXPECT_NEAR(eval_F_exact(p, s, params, m), eval_F_expanded(p, s, params, m), 1e-9);
  }
}

TEST(EvalF, UniformMetricClosedForm) {
  Rng rng(24);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = testing::uniform_index(rng, 1, 9);
    const Dist p = testing::random_dist(rng, n);
    const ObjectiveParams params{testing::uniform(rng, 0, 3), testing::uniform(rng, 0, 5)};
    const auto s = testing::random_subset(rng, n);
    double gamma = 0.0, plogp = 0.0;
    for (const TokenId i : s) {
      gamma += p.prob(i);
      plogp += p.prob(i) * p.logprob(i);
    }
    const double closed = 1 - gamma + (params.lambda - params.beta) * std::log(gamma) -
                          params.lambda / gamma * plogp;
    EXPECT_NEAR(eval_F_uniform(p, s, params), closed, 1e-12);
    EXPECT_NEAR(eval_F_expanded(p, s, params, uniform_metric()), closed, 1e-12);
    EXPECT_NEAR(eval_F_exact(p, s, params, uniform_metric()), closed, 1e-9);
  }
}

TEST(EvalF, ScaleCovarianceOfTheTransportTerm) {
  Rng rng(25);
  const TokenMetric m = testing::random_metric(rng, 6);
  const Dist p = testing::random_dist(rng, 6);
  const auto s = testing::random_proper_subset(rng, 6);
  const ObjectiveParams zero{0.0, 0.0};
  const double base = eval_F_exact(p, s, zero, m);
  EXPECT_NEAR(eval_F_exact(p, s, zero, m.scaled(2.5)), 2.5 * base, 1e-12);
  EXPECT_NEAR(eval_F_exact(p, s, zero, scaled_metric(m, 2.5)), 2.5 * base, 1e-12);
}

TEST(Params, Validation) {
  EXPECT_THROW((ObjectiveParams{-0.1, 1.0}.validate()), std::invalid_argument);
  EXPECT_THROW((ObjectiveParams{1.0, NAN}.validate()), std::invalid_argument);
  EXPECT_NO_THROW((ObjectiveParams{0.0, 0.0}.validate()));
  EXPECT_DOUBLE_EQ((ObjectiveParams{}.mass_coefficient()), 2.8 - 2.2);
}

TEST(CombinedScores, ReferenceExample) {
  const Dist p = dist({0.5, 0.3, 0.2});
  const ScoredPool s = combined_scores(p, testing::iota_tokens(3), std::vector<double>{-0.2, 0.0, -1.5}, 2.2);
  // High-precision reference values of f + 2.2 log p.
  EXPECT_NEAR(s.phi[0], -1.7249237972318797, 1e-14);
  EXPECT_NEAR(s.phi[1], -2.6487401695170592, 1e-14);
  EXPECT_NEAR(s.phi[2], -5.0407634073550208, 1e-14);
}

TEST(CombinedScores, LimitCasesAndDroppedTokens) {
  const Dist p = dist({0.5, 0.0, 0.3, 0.2});
  const std::vector<double> f{-0.2, 9.0, 0.1, -1.0};
  const ScoredPool no_entropy = combined_scores(p, testing::iota_tokens(4), f, 0.0);
  EXPECT_EQ(no_entropy.dropped, 1u);
  EXPECT_EQ(no_entropy.tokens, (std::vector<TokenId>{0, 2, 3}));
  EXPECT_EQ(no_entropy.phi, (std::vector<double>{-0.2, 0.1, -1.0}));
  const ScoredPool flat = combined_scores(p, testing::iota_tokens(4), std::vector<double>(4, 0.0), 1.5);
  for (std::size_t k = 0; k < flat.size(); ++k) EXPECT_DOUBLE_EQ(flat.phi[k], 1.5 * flat.logprobs[k]);
  EXPECT_THROW(combined_scores(p, testing::iota_tokens(4), std::vector<double>(3, 0.0), 1.0),
               std::invalid_argument);
}

TEST(EvalG, SingletonAndBoundary) {
  Rng rng(26);
  const ScoredPool s = testing::random_scored_pool(rng, 6, 1.1);
  const ObjectiveParams params{1.1, 2.6};
  for (std::size_t k = 0; k < s.size(); ++k) {
    const std::vector<std::size_t> one{k};
    EXPECT_NEAR(eval_G(s, one, params).value, s.phi[k] + 1.5 * s.logprobs[k], 1e-14);
  }
  const std::vector<std::size_t> subset{0, 2, 5};
  double mass = 0.0, gamma = 0.0;
  for (const auto k : subset) {
    mass += s.probs[k] * s.phi[k];
    gamma += s.probs[k];
  }
  EXPECT_NEAR(eval_G(s, subset, {1.1, 1.1}).value, mass / gamma, 1e-14);
  EXPECT_THROW(eval_G(s, std::vector<std::size_t>{}, params), std::invalid_argument);
}

TEST(EvalG, SurrogateLowerBoundsTheObjective) {
  Rng rng(27);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = testing::uniform_index(rng, 2, 8);
    const TokenMetric m = testing::random_metric(rng, n);
    const Dist p = testing::random_dist(rng, n);
    const ObjectiveParams params{testing::uniform(rng, 0, 3), testing::uniform(rng, 0, 5)};
    const auto s = testing::random_subset(rng, n);
    const auto f = testing::random_feasible_potential(rng, m);
    const ScoredPool scored = combined_scores(p, testing::iota_tokens(n), f, params.lambda);
    std::vector<std::size_t> positions(s.begin(), s.end());
    const SurrogateValue g = eval_G(scored, positions, params);
    EXPECT_LE(g.c_f - g.value, eval_F_exact(p, s, params, m) + 1e-9);
  }
}

}  // namespace
}  // namespace topw
