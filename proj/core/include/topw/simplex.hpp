#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "topw/geometry.hpp"

namespace topw {

/// Probability vector over a vocabulary with log-domain access.
/// logprob(i) is -inf exactly where prob(i) == 0.
class Dist {
 public:
  Dist() = default;

  /// Validates nonnegativity and a total within 1e-9 of one.
  static Dist from_probs(std::vector<double> probs);

  std::size_t size() const { return probs_.size(); }
  double prob(TokenId i) const { return probs_[i]; }
  double logprob(TokenId i) const { return logprobs_[i]; }
  std::span<const double> probs() const { return probs_; }
  std::span<const double> logprobs() const { return logprobs_; }

  /// Token ids with positive probability, ascending.
  std::vector<TokenId> support() const;

 private:
  friend Dist from_logits(std::span<const double> logits, double temperature);
  friend Dist make_dist_unchecked(std::vector<double> probs, std::vector<double> logprobs);

  std::vector<double> probs_;
  std::vector<double> logprobs_;
};

/// Softmax at the given temperature via a max-shifted log-sum-exp.
/// Rejects NaN/+inf logits, all -inf logits and non-positive or non-finite temperatures.
Dist from_logits(std::span<const double> logits, double temperature);
Dist from_logits(std::span<const float> logits, double temperature);

/// An ordered token subset and the mass it retains.
struct Crop {
  std::vector<TokenId> members;  // selection order
  double gamma = 0.0;

  std::size_t size() const { return members.size(); }
  bool contains(TokenId t) const;
  /// Members sorted ascending, for set comparisons.
  std::vector<TokenId> sorted_members() const;
};

struct CropResult {
  Crop crop;
  Dist q;
};

double retained_mass(const Dist& p, std::span<const TokenId> set);

/// Tokens of [0, n) not in set, ascending.
std::vector<TokenId> complement(std::size_t n, std::span<const TokenId> set);

/// Renormalized restriction q_S(i) = p_i / Gamma_S on S.
/// Rejects empty, out-of-range or duplicated sets, and zero retained mass.
CropResult crop(const Dist& p, std::span<const TokenId> set);

/// Shannon entropy in nats, with 0 log 0 = 0.
double entropy(const Dist& q);

struct EntropyIdentity {
  double lhs = 0.0;  // entropy of the cropped distribution
  double rhs = 0.0;  // -(1/Gamma) sum_S p log p + log Gamma
};
EntropyIdentity cropped_entropy_identity(const Dist& p, std::span<const TokenId> set);

/// p(. | S); same distribution as crop(p, S).q.
Dist conditional(const Dist& p, std::span<const TokenId> set);

}  // namespace topw
