#pragma once

// Trace bundles: a directory holding
//   meta.json       text descriptor (format_version, n, m, steps, dtype, endianness, layout)
//   embeddings.f32  n x m little-endian float32, row-major
//   logits.f32      steps x n little-endian float32, row-major

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "topw/geometry.hpp"

namespace topw {

inline constexpr int kTraceFormatVersion = 1;

/// Malformed or inconsistent trace data (CLI exit code 2).
class TraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TraceMeta {
  int format_version = kTraceFormatVersion;
  std::size_t n = 0;      // vocabulary size
  std::size_t m = 0;      // embedding dimension
  std::size_t steps = 0;  // decoding steps
  std::string dtype = "float32";
  std::string endianness = "little";
  std::string layout = "row-major";
};

struct TraceBundle {
  TraceMeta meta;
  std::vector<float> embeddings;
  std::vector<float> logits;

  std::span<const float> step_logits(std::size_t step) const {
    return {logits.data() + step * meta.n, meta.n};
  }
  EmbeddingMatrix embedding_matrix() const { return {meta.n, meta.m, embeddings}; }
};

/// Checks dimensions against array lengths and rejects NaN entries.
void validate_trace(const TraceBundle& bundle);

TraceBundle load_trace(const std::filesystem::path& dir);
void save_trace(const TraceBundle& bundle, const std::filesystem::path& dir);

/// FNV-1a 64 over the descriptor dimensions and both arrays' little-endian bytes.
std::uint64_t trace_digest(const TraceBundle& bundle);

enum class SynthGenerator {
  GaussianDirichlet,  // iid N(0, 1) embeddings, log-Dirichlet logits
  Clustered,          // tight Gaussian clusters around random centers, log-Dirichlet logits
};

struct SynthOptions {
  std::size_t n = 1000;
  std::size_t m = 64;
  std::size_t steps = 8;
  std::uint64_t seed = 0;
  SynthGenerator generator = SynthGenerator::GaussianDirichlet;
  /// Symmetric Dirichlet concentration for each step's distribution; small
  /// values give the peaked, heavy-tailed shape of language-model outputs.
  double concentration = 0.005;
  std::size_t clusters = 2;
  double cluster_spread = 0.05;
};

/// Deterministic in options.seed.
TraceBundle synth_trace(const SynthOptions& options);

}  // namespace topw
