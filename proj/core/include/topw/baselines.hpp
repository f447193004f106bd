#pragma once

// Probability-only truncators sharing the logits-processor shape of the
// Top-W decoder, plus exhaustive checks that tie top-k and Top-H to the
// objective under the uniform metric.

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "topw/simplex.hpp"

namespace topw {

struct TopK {
  std::size_t k = 50;
};
struct TopP {
  double threshold = 0.9;
};
struct MinP {
  double ratio = 0.1;
};
struct TopH {
  double alpha = 0.4;
};

using BaselineRule = std::variant<TopK, TopP, MinP, TopH>;

struct BaselineConfig {
  BaselineRule rule = TopP{};
  double sel_temperature = 1.0;

  void validate() const;
  /// "top_k=50", "top_p=0.9", ...
  std::string describe() const;
};

struct BaselineResult {
  std::vector<float> masked_logits;
  Crop crop;  // members in descending probability
};

/// top_k keeps the k most probable; top_p the shortest probability-descending
/// prefix with mass >= threshold; min_p every token with p >= ratio * max p;
/// top_h grows the probability-descending prefix while H(q_S) <= alpha H(p).
/// Probability ties rank the smaller token id first.
BaselineResult apply_baseline(std::span<const float> logits, const BaselineConfig& config);

/// The crop a rule selects from a probability vector (zero-probability tokens
/// are never kept).
Crop baseline_crop(std::span<const double> probs, const BaselineRule& rule);

struct TopKReduction {
  bool matches = false;
  std::vector<TokenId> minimizer;  // ascending
  std::vector<TokenId> top_k;      // ascending
  double minimizer_gamma = 0.0;
  double top_k_gamma = 0.0;
};

inline constexpr std::size_t kMaxExhaustiveVocab = 14;

/// Exhaustive minimization of F_{0,0} under the uniform metric over |S| <= k.
/// Matches when the minimizer equals the top-k set up to probability ties.
TopKReduction topk_reduction_check(const Dist& p, std::size_t k);

struct TopHLagrangian {
  std::vector<TokenId> minimizer;  // ascending
  double gamma = 0.0;
  double entropy = 0.0;
  bool pareto_undominated = false;
  std::vector<TokenId> dominating;  // a witness when dominated
};

/// Exhaustive minimization of F_{lambda,0} under the uniform metric, then a
/// scan of all subsets for one with strictly higher mass and strictly lower
/// cropped entropy.
TopHLagrangian toph_lagrangian_check(const Dist& p, double lambda);

}  // namespace topw
