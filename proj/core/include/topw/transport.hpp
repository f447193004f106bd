#pragma once

// Exact Wasserstein-1 on small supports and Kantorovich-Rubinstein dual
// checks. These are test-scale oracles: the decode path never calls them.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "topw/geometry.hpp"
#include "topw/simplex.hpp"

namespace topw {

inline constexpr std::size_t kMaxExactSupport = 64;
inline constexpr double kTransportMassFloor = 1e-15;

/// Type-erased ground metric. Implicitly wraps a TokenMetric by reference,
/// so the metric must outlive the wrapper.
class GroundMetric {
 public:
  GroundMetric(const TokenMetric& metric);  // NOLINT(google-explicit-constructor)
  explicit GroundMetric(std::function<double(TokenId, TokenId)> fn);

  double operator()(TokenId i, TokenId j) const { return fn_(i, j); }

 private:
  std::function<double(TokenId, TokenId)> fn_;
};

/// d_u(i, j) = 1{i != j}.
GroundMetric uniform_metric();
/// alpha * base(i, j).
GroundMetric scaled_metric(GroundMetric base, double alpha);

struct TransportPlan {
  std::vector<TokenId> sources;
  std::vector<TokenId> targets;
  std::vector<double> flows;  // sources.size() x targets.size(), row-major
  double cost = 0.0;

  double flow(std::size_t r, std::size_t c) const { return flows[r * targets.size() + c]; }
};

struct W1Result {
  double value = 0.0;
  TransportPlan plan;
  /// Optimal 1-Lipschitz dual potential over the whole vocabulary
  /// (c-transform of the solver's node potentials).
  std::vector<double> dual;
};

/// Exact W1(P, Q) by successive shortest paths. Throws std::length_error if
/// the joint support exceeds kMaxExactSupport.
W1Result w1_exact(const Dist& P, const Dist& Q, const GroundMetric& metric);

/// 1 - Gamma_S: W1(p, q_S) under the uniform metric.
double w1_uniform_metric(const Dist& p, std::span<const TokenId> set);

struct LipschitzCheck {
  bool feasible = true;
  TokenId worst_i = 0;
  TokenId worst_j = 0;
  /// max over pairs of |f(i) - f(j)| - d(i, j); <= 0 when feasible.
  double worst_excess = 0.0;
};

/// values[k] is f(tokens[k]). Exhaustive over pairs with relative slack 1e-9.
LipschitzCheck check_lipschitz(std::span<const double> values, const GroundMetric& metric,
                               std::span<const TokenId> tokens);

struct Factorization {
  double direct = 0.0;    // W1(p, q_S)
  double factored = 0.0;  // (1 - Gamma_S) W1(p(.|S^c), p(.|S))
  double residual() const;
};

/// Requires 0 < Gamma_S < 1.
Factorization factorization_residual(const Dist& p, std::span<const TokenId> set,
                                     const GroundMetric& metric);

/// W1(P, Q) - (E_P[f] - E_Q[f]) for a vocabulary-indexed potential f.
/// Throws if f violates 1-Lipschitz on the joint support.
double kr_dual_gap(const Dist& P, const Dist& Q, std::span<const double> f,
                   const GroundMetric& metric);

}  // namespace topw
