#pragma once

#include <span>
#include <vector>

#include "topw/geometry.hpp"
#include "topw/transport.hpp"

namespace topw {

enum class PotentialKind { Attraction, Repulsion, Custom };

/// A 1-Lipschitz potential stored over a candidate pool only.
struct Potential {
  std::vector<TokenId> pool;
  std::vector<double> values;         // aligned with pool
  std::vector<TokenId> anchor_set;    // empty when not anchored
  PotentialKind kind = PotentialKind::Custom;
};

/// f(i) = -dist(i, S); S must be a nonempty subset of pool.
Potential attraction_potential(const TokenMetric& metric, std::span<const TokenId> pool,
                               std::span<const TokenId> anchor_set);

/// f(i) = +dist(i, S).
Potential repulsion_potential(const TokenMetric& metric, std::span<const TokenId> pool,
                              std::span<const TokenId> anchor_set);

/// Validating constructor: throws std::invalid_argument naming the worst pair
/// unless values are 1-Lipschitz over the pool.
Potential custom_potential(const TokenMetric& metric, std::vector<TokenId> pool,
                           std::vector<double> values, std::vector<TokenId> anchor_set = {});

struct EnvelopeCheck {
  bool inside = true;
  TokenId worst_token = 0;
  double worst_excess = 0.0;  // max of |f(i)| - dist(i, S); <= 0 inside
};

/// -dist(i, S) <= f(i) <= dist(i, S) on every pool token. Throws if f is not
/// anchored (nonzero on its anchor set, or no anchor set).
EnvelopeCheck envelope_check(const Potential& f, const TokenMetric& metric);

}  // namespace topw
