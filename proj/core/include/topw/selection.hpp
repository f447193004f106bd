#pragma once

// Exact fixed-potential subset step.
//
// For fixed scores phi_i = f_i + lambda log p_i the surrogate
//   G(S) = sum_S p_i phi_i / Gamma_S + (beta - lambda) log Gamma_S
// is maximized by a phi-ordered prefix when beta > lambda and by a single
// token when beta <= lambda. Both cases are O(m log m) in the pool size.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "topw/objective.hpp"
#include "topw/simplex.hpp"

namespace topw {

enum class TieBreak {
  /// Equal phi: larger probability first, then smaller token id.
  ProbabilityThenTokenId,
};

enum class Regime { Prefix, Singleton };

const char* to_string(Regime regime);

/// Pool positions sorted by descending phi under the tie-break (a total order).
std::vector<std::size_t> phi_order(const ScoredPool& scored, TieBreak tiebreak);

struct PrefixScan {
  std::vector<std::size_t> order;      // pool positions, phi descending
  std::vector<double> gamma_prefix;    // Gamma_k
  std::vector<double> phi_mass_prefix; // Phi_k = sum of p * phi over the prefix
  std::vector<double> objective;       // J_k
  std::size_t best_size = 0;           // smallest maximizing k (1-based)
};

/// Prefix sums and J_k for every k. Valid for any sign of beta - lambda.
PrefixScan prefix_scan(const ScoredPool& scored, const ObjectiveParams& params,
                       TieBreak tiebreak = TieBreak::ProbabilityThenTokenId);

struct SelectionResult {
  Crop crop;                            // members in selection order
  std::vector<std::size_t> positions;   // pool positions, same order
  double value = 0.0;                   // achieved G
  Regime regime = Regime::Prefix;
};

/// beta > lambda scans prefixes; beta <= lambda picks the best singleton by
/// phi_i + (beta - lambda) log p_i. Throws on an empty pool.
SelectionResult s_step(const ScoredPool& scored, const ObjectiveParams& params,
                       TieBreak tiebreak = TieBreak::ProbabilityThenTokenId);

/// Fills out[k] with the potential at pool position positions[k].
using PotentialOracle =
    std::function<void(std::span<const std::size_t> positions, std::span<double> out)>;

struct LazySelection {
  SelectionResult result;    // positions index the full pool
  std::size_t evaluated = 0; // oracle calls' total positions
};

/// The s_step crop over the whole pool, evaluating the potential only where
/// it can change the answer. Every member of an optimal crop has
/// phi >= G* - max(beta - lambda, 0) (G* of the singleton case when
/// beta <= lambda), and G* is at least the optimum over any evaluated subset,
/// so tokens whose upper bound f_upper + coef * log p falls below that
/// threshold are never evaluated (coef = lambda in the prefix regime, beta
/// otherwise). `scored` supplies tokens, probs and logprobs in nonincreasing
/// probability order; its potential and phi fields are ignored. `known`
/// positions carry exact potentials `known_f`; all others must satisfy
/// f <= f_upper.
LazySelection lazy_s_step(const ScoredPool& scored, std::span<const std::size_t> known,
                          std::span<const double> known_f, double f_upper,
                          const PotentialOracle& oracle, const ObjectiveParams& params,
                          TieBreak tiebreak = TieBreak::ProbabilityThenTokenId);

inline constexpr std::size_t kMaxBruteForcePool = 14;

struct BruteForceResult {
  std::vector<std::size_t> positions;  // ascending
  std::vector<TokenId> tokens;         // ascending
  double value = 0.0;
};

/// Enumerates every nonempty subset; exact ties go to the lexicographically
/// smallest token set. Throws std::length_error above kMaxBruteForcePool.
BruteForceResult brute_force_s_step(const ScoredPool& scored, const ObjectiveParams& params);

/// Retained mass of the selected crop at each beta (ascending, all >= lambda).
std::vector<double> beta_sweep_gammas(const ScoredPool& scored, double lambda,
                                      std::span<const double> betas,
                                      TieBreak tiebreak = TieBreak::ProbabilityThenTokenId);

struct ShiftCheck {
  bool same_set = false;
  double value_shift = 0.0;  // G(f + c) - G(f)
  bool ok = false;           // same set and |value_shift - c| <= 1e-9
};

/// Re-runs the subset step with every potential shifted by c.
ShiftCheck shift_check(const ScoredPool& scored, const ObjectiveParams& params, TieBreak tiebreak,
                       double c);

}  // namespace topw
