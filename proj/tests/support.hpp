#pragma once

// Random instance generators shared by the unit, property and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "topw/geometry.hpp"
#include "topw/objective.hpp"
#include "topw/simplex.hpp"

namespace topw::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Strictly positive distribution with a spread of magnitudes.
inline Dist random_dist(Rng& rng, std::size_t n, double logit_scale = 2.0) {
  std::normal_distribution<double> g(0.0, logit_scale);
  std::vector<double> logits(n);
  for (auto& l : logits) l = g(rng);
  return from_logits(std::span<const double>(logits), 1.0);
}

inline EmbeddingMatrix random_embeddings(Rng& rng, std::size_t n, std::size_t dim) {
  std::normal_distribution<float> g(0.0f, 1.0f);
  EmbeddingMatrix e{n, dim, std::vector<float>(n * dim)};
  for (auto& v : e.data) v = g(rng);
  return e;
}

inline TokenMetric random_metric(Rng& rng, std::size_t n, std::size_t dim = 4) {
  return build_metric(random_embeddings(rng, n, dim));
}

/// Nonempty random subset of [0, n), ascending.
inline std::vector<TokenId> random_subset(Rng& rng, std::size_t n) {
  std::vector<TokenId> s;
  while (s.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      if (uniform(rng, 0.0, 1.0) < 0.5) s.push_back(static_cast<TokenId>(i));
    }
  }
  return s;
}

/// Nonempty proper subset of [0, n), ascending. Requires n >= 2.
inline std::vector<TokenId> random_proper_subset(Rng& rng, std::size_t n) {
  std::vector<TokenId> s;
  while (s.empty() || s.size() == n) s = random_subset(rng, n);
  return s;
}

inline std::vector<TokenId> iota_tokens(std::size_t n) {
  std::vector<TokenId> t(n);
  std::iota(t.begin(), t.end(), TokenId{0});
  return t;
}

/// A random 1-Lipschitz potential on [0, n): the pointwise minimum of a few
/// cones c_k + d(., a_k), which is 1-Lipschitz for any metric.
inline std::vector<double> random_feasible_potential(Rng& rng, const TokenMetric& metric) {
  const std::size_t n = metric.size();
  const std::size_t cones = uniform_index(rng, 1, 3);
  std::vector<double> f(n, std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < cones; ++k) {
    const auto a = static_cast<TokenId>(uniform_index(rng, 0, n - 1));
    const double c = uniform(rng, -2.0, 2.0);
    for (std::size_t i = 0; i < n; ++i) {
      f[i] = std::min(f[i], c + metric.distance(static_cast<TokenId>(i), a));
    }
  }
  return f;
}

/// A ScoredPool over the whole vocabulary with arbitrary potential values.
inline ScoredPool random_scored_pool(Rng& rng, std::size_t n, double lambda,
                                     double potential_scale = 3.0) {
  const Dist p = random_dist(rng, n);
  std::vector<double> f(n);
  for (auto& v : f) v = uniform(rng, -potential_scale, potential_scale);
  return combined_scores(p, iota_tokens(n), f, lambda);
}

}  // namespace topw::testing
