#include "topw/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace topw {

namespace {

void require_anchor_in_pool(std::span<const TokenId> pool, std::span<const TokenId> anchor_set,
                            const char* who) {
  if (anchor_set.empty()) throw std::invalid_argument(std::string(who) + ": empty anchor set");
  for (const TokenId s : anchor_set) {
    if (std::find(pool.begin(), pool.end(), s) == pool.end()) {
      throw std::invalid_argument(std::string(who) + ": anchor token " + std::to_string(s) +
                                  " is not in the pool");
    }
  }
}

Potential distance_potential(const TokenMetric& metric, std::span<const TokenId> pool,
                             std::span<const TokenId> anchor_set, double sign, PotentialKind kind,
                             const char* who) {
  require_anchor_in_pool(pool, anchor_set, who);
  Potential f;
  f.pool.assign(pool.begin(), pool.end());
  f.anchor_set.assign(anchor_set.begin(), anchor_set.end());
  f.kind = kind;
  f.values = metric.batched_dist_to_set(pool, anchor_set);
  for (auto& v : f.values) v *= sign;
  return f;
}

}  // namespace

Potential attraction_potential(const TokenMetric& metric, std::span<const TokenId> pool,
                               std::span<const TokenId> anchor_set) {
  return distance_potential(metric, pool, anchor_set, -1.0, PotentialKind::Attraction,
                            "attraction_potential");
}

Potential repulsion_potential(const TokenMetric& metric, std::span<const TokenId> pool,
                              std::span<const TokenId> anchor_set) {
  return distance_potential(metric, pool, anchor_set, 1.0, PotentialKind::Repulsion,
                            "repulsion_potential");
}

Potential custom_potential(const TokenMetric& metric, std::vector<TokenId> pool,
                           std::vector<double> values, std::vector<TokenId> anchor_set) {
  if (pool.size() != values.size()) {
    throw std::invalid_argument("custom_potential: values and pool differ in length");
  }
  const LipschitzCheck check = check_lipschitz(values, GroundMetric(metric), pool);
  if (!check.feasible) {
    throw std::invalid_argument("custom_potential: not 1-Lipschitz on pair (" +
                                std::to_string(check.worst_i) + ", " +
                                std::to_string(check.worst_j) + "), excess " +
                                std::to_string(check.worst_excess));
  }
  if (!anchor_set.empty()) require_anchor_in_pool(pool, anchor_set, "custom_potential");
  Potential f;
  f.pool = std::move(pool);
  f.values = std::move(values);
  f.anchor_set = std::move(anchor_set);
  f.kind = PotentialKind::Custom;
  return f;
}

EnvelopeCheck envelope_check(const Potential& f, const TokenMetric& metric) {
  if (f.anchor_set.empty()) throw std::invalid_argument("envelope_check: potential is not anchored");
  std::unordered_map<TokenId, std::size_t> where;
  for (std::size_t k = 0; k < f.pool.size(); ++k) where.emplace(f.pool[k], k);
  for (const TokenId s : f.anchor_set) {
    const auto it = where.find(s);
    if (it == where.end() || f.values[it->second] != 0.0) {
      throw std::invalid_argument("envelope_check: potential is not zero on anchor token " +
                                  std::to_string(s));
    }
  }
  const std::vector<double> dist = metric.batched_dist_to_set(f.pool, f.anchor_set);
  EnvelopeCheck out;
  out.worst_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < f.pool.size(); ++k) {
    const double excess = std::abs(f.values[k]) - dist[k];
    if (excess > out.worst_excess) {
      out.worst_excess = excess;
      out.worst_token = f.pool[k];
    }
    if (std::abs(f.values[k]) > dist[k] * (1.0 + 1e-9) + 1e-12) out.inside = false;
  }
  return out;
}

}  // namespace topw
