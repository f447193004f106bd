#pragma once

// Top-W logits processor: candidate pool, probability-only warm start, then
// alternating f-steps (attraction potential to the current crop) and exact
// S-steps until the crop stops changing or the alternation budget runs out.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "topw/geometry.hpp"
#include "topw/objective.hpp"
#include "topw/selection.hpp"
#include "topw/simplex.hpp"

namespace topw {

/// Probability-only rule producing the initial crop inside the pool.
struct WarmStart {
  enum class Kind { Nucleus, TopK };
  Kind kind = Kind::Nucleus;
  double threshold = 0.9;  // Nucleus: cumulative mass in (0, 1]
  std::size_t k = 1;       // TopK: k >= 1

  static WarmStart nucleus(double threshold) { return {Kind::Nucleus, threshold, 1}; }
  static WarmStart top_k(std::size_t k) { return {Kind::TopK, 0.9, k}; }
  std::string describe() const;
};

struct TopWConfig {
  double lambda = 2.2;
  double beta = 2.8;
  double sel_temperature = 1.0;
  std::size_t top_m = 1200;
  std::size_t alt_iters = 3;
  WarmStart warm_start = WarmStart::nucleus(0.9);
  double epsilon_whiten = kDefaultWhitenEpsilon;
  TieBreak tiebreak = TieBreak::ProbabilityThenTokenId;
  /// After convergence, run one more alternation and throw std::logic_error
  /// if the crop moves. Debug aid; off in production.
  bool verify_convergence = false;

  ObjectiveParams objective() const { return {lambda, beta}; }
  /// Throws on invalid values. Returns warnings (beta <= lambda collapses
  /// every S-step to a single token).
  std::vector<std::string> validate() const;
};

struct StepReport {
  Crop crop;
  std::size_t pool_size = 0;
  std::size_t iterations_used = 0;
  std::size_t potentials_evaluated = 0;  // off-crop distances computed, summed over iterations
  bool converged_early = false;
  bool fixed_point_verified = false;
  std::vector<Regime> regime_per_iter;
  double gamma = 0.0;
  double crop_entropy = 0.0;
  std::chrono::nanoseconds elapsed{0};
};

struct DecodeResult {
  std::vector<float> masked_logits;  // original value on the crop, -inf elsewhere
  StepReport report;
};

/// One decoding step. logits.size() must equal metric.size(); top_m is
/// clamped to the vocabulary. Throws if no logit is finite.
DecodeResult process_logits(std::span<const float> logits, const TokenMetric& metric,
                            const TopWConfig& config);

/// Categorical draw from softmax(masked / temperature); deterministic in seed.
TokenId sample_from_masked(std::span<const float> masked_logits, double temperature,
                           std::uint64_t seed);

enum class PoolOrder {
  Phi,          // pool = phi-order top_m (the exactness hypothesis holds by construction)
  Probability,  // pool = probability-order top_m (what the decoder uses)
};

struct PoolProbe {
  std::size_t full_best_size = 0;   // k* of the full-vocabulary scan
  std::size_t pool_best_size = 0;   // k* of the pooled scan
  std::size_t covered_prefix = 0;   // largest L with the phi-order top-L inside the pool
  bool hypothesis_holds = false;    // covered_prefix >= full_best_size
  bool identical = false;           // same k* and same S*
};

/// Compares the pooled prefix scan against the full scan. Requires beta >= lambda.
PoolProbe pool_exactness_probe(const ScoredPool& full, std::size_t top_m,
                               const ObjectiveParams& params,
                               TieBreak tiebreak = TieBreak::ProbabilityThenTokenId,
                               PoolOrder order = PoolOrder::Phi);

}  // namespace topw
