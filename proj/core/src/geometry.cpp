#include "topw/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace topw {

double squared_euclidean(const double* a, const double* b, std::size_t dim) {
  // Eight independent lanes with a fixed combine order: vectorizes cleanly
  // and gives the same bits on every call site.
  double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t l = 0;
  for (; l + 8 <= dim; l += 8) {
    for (std::size_t k = 0; k < 8; ++k) {
      const double diff = a[l + k] - b[l + k];
      acc[k] += diff * diff;
    }
  }
  double tail = 0.0;
  for (; l < dim; ++l) {
    const double diff = a[l] - b[l];
    tail += diff * diff;
  }
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
         ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

TokenMetric build_metric(const EmbeddingMatrix& emb, double epsilon) {
  if (emb.rows == 0 || emb.dim == 0) {
    throw std::invalid_argument("build_metric: embedding matrix must be non-empty");
  }
  if (emb.data.size() != emb.rows * emb.dim) {
    throw std::invalid_argument("build_metric: data holds " + std::to_string(emb.data.size()) +
                                " values, expected " + std::to_string(emb.rows * emb.dim));
  }
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("build_metric: epsilon must be positive and finite");
  }

  const std::size_t n = emb.rows;
  const std::size_t m = emb.dim;

  TokenMetric metric;
  metric.rows_ = n;
  metric.dim_ = m;
  metric.epsilon_ = epsilon;
  metric.whitened_.resize(n * m);
  metric.mean_.assign(m, 0.0);
  metric.scale_.assign(m, 0.0);

  // Normalize rows into the whitened buffer first, then whiten in place.
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = emb.row(i);
    double norm2 = 0.0;
    for (std::size_t l = 0; l < m; ++l) {
      const double v = row[l];
      if (!std::isfinite(v)) {
        throw std::invalid_argument("build_metric: non-finite entry at token " +
                                    std::to_string(i) + ", coordinate " + std::to_string(l));
      }
      norm2 += v * v;
    }
    if (norm2 == 0.0) {
      throw std::invalid_argument("build_metric: zero-norm embedding row at token " +
                                  std::to_string(i));
    }
    const double inv = 1.0 / std::sqrt(norm2);
    double* out = metric.whitened_.data() + i * m;
    for (std::size_t l = 0; l < m; ++l) out[l] = static_cast<double>(row[l]) * inv;
  }

  for (std::size_t i = 0; i < n; ++i) {
    const double* r = metric.whitened_.data() + i * m;
    for (std::size_t l = 0; l < m; ++l) metric.mean_[l] += r[l];
  }
  for (auto& mu : metric.mean_) mu /= static_cast<double>(n);

  std::vector<double> var(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* r = metric.whitened_.data() + i * m;
    for (std::size_t l = 0; l < m; ++l) {
      const double c = r[l] - metric.mean_[l];
      var[l] += c * c;
    }
  }
  for (std::size_t l = 0; l < m; ++l) {
    var[l] /= static_cast<double>(n);
    metric.scale_[l] = 1.0 / std::sqrt(var[l] + epsilon);
  }

  for (std::size_t i = 0; i < n; ++i) {
    double* r = metric.whitened_.data() + i * m;
    for (std::size_t l = 0; l < m; ++l) r[l] = metric.scale_[l] * (r[l] - metric.mean_[l]);
  }
  return metric;
}

void TokenMetric::check_index(TokenId i) const {
  if (static_cast<std::size_t>(i) >= rows_) {
    throw std::out_of_range("token id " + std::to_string(i) + " outside vocabulary of size " +
                            std::to_string(rows_));
  }
}

double TokenMetric::squared_distance(TokenId i, TokenId j) const {
  check_index(i);
  check_index(j);
  return squared_euclidean(whitened(i).data(), whitened(j).data(), dim_);
}

double TokenMetric::distance(TokenId i, TokenId j) const {
  return std::sqrt(squared_distance(i, j));
}

double TokenMetric::dist_to_set(TokenId i, std::span<const TokenId> set) const {
  if (set.empty()) throw std::invalid_argument("dist_to_set: empty set");
  check_index(i);
  double best = std::numeric_limits<double>::infinity();
  for (const TokenId j : set) best = std::min(best, squared_distance(i, j));
  return std::sqrt(best);
}

void TokenMetric::squared_distance_block(std::span<const TokenId> pool,
                                         std::span<const TokenId> targets,
                                         std::span<double> out) const {
  if (out.size() < pool.size() * targets.size()) {
    throw std::invalid_argument("squared_distance_block: output buffer too small");
  }
  for (const TokenId t : targets) check_index(t);
  const std::size_t k = targets.size();
  for (std::size_t r = 0; r < pool.size(); ++r) {
    check_index(pool[r]);
    const double* a = whitened(pool[r]).data();
    double* dst = out.data() + r * k;
    for (std::size_t c = 0; c < k; ++c) {
      dst[c] = squared_euclidean(a, whitened(targets[c]).data(), dim_);
    }
  }
}

std::vector<double> TokenMetric::batched_dist_to_set(std::span<const TokenId> pool,
                                                     std::span<const TokenId> set) const {
  if (set.empty()) throw std::invalid_argument("batched_dist_to_set: empty set");
  std::vector<double> block(pool.size() * set.size());
  squared_distance_block(pool, set, block);
  std::vector<double> out(pool.size());
  for (std::size_t r = 0; r < pool.size(); ++r) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < set.size(); ++c) best = std::min(best, block[r * set.size() + c]);
    out[r] = std::sqrt(best);
  }
  return out;
}

TokenMetric TokenMetric::scaled(double alpha) const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("TokenMetric::scaled: alpha must be positive and finite");
  }
  TokenMetric copy = *this;
  for (auto& v : copy.whitened_) v *= alpha;
  for (auto& s : copy.scale_) s *= alpha;
  return copy;
}

}  // namespace topw
