#pragma once

// The Wasserstein-entropy-mass objective
//   F(S) = W1(p, q_S) + lambda H(q_S) - beta log Gamma_S
// and its fixed-potential surrogate G_f(S).

#include <cstddef>
#include <span>
#include <vector>

#include "topw/geometry.hpp"
#include "topw/simplex.hpp"
#include "topw/transport.hpp"

namespace topw {

struct ObjectiveParams {
  double lambda = 2.2;  // entropy weight (nats)
  double beta = 2.8;    // log-mass weight (nats)

  /// Mass coefficient beta - lambda of the surrogate.
  double mass_coefficient() const { return beta - lambda; }
  /// Throws unless both weights are finite and nonnegative.
  void validate() const;
};

/// Exact F with W1 from the transport oracle (test scale only).
double eval_F_exact(const Dist& p, std::span<const TokenId> set, const ObjectiveParams& params,
                    const GroundMetric& metric);

/// F through the factorized form; the W1 term is defined as 0 when S keeps all mass.
double eval_F_expanded(const Dist& p, std::span<const TokenId> set, const ObjectiveParams& params,
                       const GroundMetric& metric);

/// F under the 0-1 metric in closed form:
///   1 - Gamma + (lambda - beta) log Gamma - (lambda / Gamma) sum_S p log p.
double eval_F_uniform(const Dist& p, std::span<const TokenId> set, const ObjectiveParams& params);

/// A candidate pool with per-token probabilities, potentials and combined
/// scores phi_i = f_i + lambda log p_i. Zero-probability tokens are never stored.
struct ScoredPool {
  std::vector<TokenId> tokens;
  std::vector<double> probs;
  std::vector<double> logprobs;
  std::vector<double> potential;
  std::vector<double> phi;
  std::size_t dropped = 0;  // pool members removed for zero probability

  std::size_t size() const { return tokens.size(); }
};

/// f is aligned with pool.
ScoredPool combined_scores(const Dist& p, std::span<const TokenId> pool, std::span<const double> f,
                           double lambda);

struct SurrogateValue {
  double value = 0.0;  // G_f(S)
  double gamma = 0.0;  // Gamma_S
  double c_f = 0.0;    // sum over the pool of p_i f_i
};

/// G_f over a nonempty subset of pool positions.
SurrogateValue eval_G(const ScoredPool& scored, std::span<const std::size_t> positions,
                      const ObjectiveParams& params);

}  // namespace topw
