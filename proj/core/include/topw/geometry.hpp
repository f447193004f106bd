#pragma once

// Embedding-induced ground metric over a vocabulary.
//
// Rows are l2-normalized, mean-centered and diagonally whitened; the token
// distance is the Euclidean distance between whitened rows. All distance
// arithmetic runs in double precision regardless of the input dtype.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace topw {

using TokenId = std::uint32_t;

inline constexpr double kDefaultWhitenEpsilon = 1e-5;

/// Raw input embeddings, row i = embedding of token i (row-major).
struct EmbeddingMatrix {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<float> data;

  std::span<const float> row(std::size_t i) const {
    return {data.data() + i * dim, dim};
  }
};

class TokenMetric {
 public:
  TokenMetric() = default;

  std::size_t size() const { return rows_; }
  std::size_t dim() const { return dim_; }
  double epsilon() const { return epsilon_; }

  /// Per-coordinate whitening factors s_l = (var_l + eps)^(-1/2).
  std::span<const double> scale() const { return scale_; }
  /// Per-coordinate mean of the normalized embeddings.
  std::span<const double> mean() const { return mean_; }
  /// Whitened, centered row for token i.
  std::span<const double> whitened(TokenId i) const {
    return {whitened_.data() + static_cast<std::size_t>(i) * dim_, dim_};
  }

  double distance(TokenId i, TokenId j) const;
  double squared_distance(TokenId i, TokenId j) const;

  /// min over j in set of distance(i, j). Throws on an empty set.
  double dist_to_set(TokenId i, std::span<const TokenId> set) const;

  /// dist_to_set for every pool member; bit-identical to the scalar form.
  std::vector<double> batched_dist_to_set(std::span<const TokenId> pool,
                                          std::span<const TokenId> set) const;

  /// Fills out[r * targets.size() + c] with squared_distance(pool[r], targets[c]).
  /// Pool rows are visited once each so the target rows stay cache-resident.
  void squared_distance_block(std::span<const TokenId> pool,
                              std::span<const TokenId> targets,
                              std::span<double> out) const;

  /// Copy whose whitened coordinates (and scale factors) are multiplied by alpha > 0.
  TokenMetric scaled(double alpha) const;

 private:
  friend TokenMetric build_metric(const EmbeddingMatrix& emb, double epsilon);

  void check_index(TokenId i) const;

  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  double epsilon_ = kDefaultWhitenEpsilon;
  std::vector<double> scale_;
  std::vector<double> mean_;
  std::vector<double> whitened_;
};

/// Builds the whitened metric. Rejects zero-norm rows (naming the token) and
/// non-finite entries; epsilon must be positive and finite.
TokenMetric build_metric(const EmbeddingMatrix& emb,
                         double epsilon = kDefaultWhitenEpsilon);

/// Fixed-order squared Euclidean distance between two double rows.
double squared_euclidean(const double* a, const double* b, std::size_t dim);

}  // namespace topw
