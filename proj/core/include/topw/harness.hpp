#pragma once

// Trace-driven evaluation: per-step statistics, (lambda, beta) sweeps and
// model-forward-free latency measurement for Top-W and the baselines.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "topw/baselines.hpp"
#include "topw/decoder.hpp"
#include "topw/trace.hpp"

namespace topw {

using RuleConfig = std::variant<TopWConfig, BaselineConfig>;

struct NamedRule {
  std::string name;
  RuleConfig config;
};

/// "topw" (uses topw_defaults), "top_k=50", "top_p=0.9", "min_p=0.1", "top_h=0.4".
/// Baselines take sel_temperature from topw_defaults. Throws std::invalid_argument.
NamedRule parse_rule(std::string_view spec, const TopWConfig& topw_defaults);

/// Parses "nucleus:0.9" or "top_k:8".
WarmStart parse_warm_start(std::string_view spec);

/// One rule applied to one logits vector.
struct RuleOutcome {
  std::vector<float> masked_logits;
  Crop crop;
  double crop_entropy = 0.0;
  std::string regime;  // "prefix" / "singleton" for Top-W, "baseline" otherwise
  std::size_t iterations_used = 0;
};

RuleOutcome apply_rule(const NamedRule& rule, std::span<const float> logits,
                       const TokenMetric& metric);

struct StepStatsRow {
  std::size_t step = 0;
  std::string rule;
  std::size_t crop_size = 0;
  double gamma = 0.0;
  double crop_entropy = 0.0;
  std::string regime;
  std::size_t iterations_used = 0;
  std::int64_t elapsed_us = 0;
};

struct RunOptions {
  bool golden = false;  // zero the elapsed column
};

/// One row per (step, rule), steps outer. The metric must be built from the
/// trace's embeddings.
std::vector<StepStatsRow> run(const TraceBundle& trace, const TokenMetric& metric,
                              std::span<const NamedRule> rules, const RunOptions& options = {});

void write_stats_csv(std::ostream& out, std::span<const StepStatsRow> rows);

struct SweepRow {
  double lambda = 0.0;
  double beta = 0.0;
  double mean_gamma = 0.0;
  double mean_crop_size = 0.0;
  double mean_entropy = 0.0;
  /// "ok" / "violated" when asserted (beta >= lambda, alt_iters == 1, previous
  /// beta >= lambda), "unasserted" for multi-iteration runs, "n/a" otherwise.
  std::string monotone;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::size_t monotonicity_violations = 0;  // asserted comparisons only
};

/// Every (lambda, beta) pair with the other fields of base. Betas are scanned
/// ascending; per-step Gamma is compared with the previous beta at fixed lambda.
SweepResult sweep(const TraceBundle& trace, const TokenMetric& metric,
                  std::span<const double> lambda_grid, std::span<const double> beta_grid,
                  const TopWConfig& base);

void write_sweep_csv(std::ostream& out, const SweepResult& result);

struct LatencyRow {
  std::string rule;
  std::size_t samples = 0;
  double mean_us = 0.0;
  double median_us = 0.0;
  double p99_us = 0.0;
};

/// Times each processor call over all steps, `repeats` passes after
/// `warmup` untimed passes. Single-threaded; metric construction excluded.
std::vector<LatencyRow> bench(const TraceBundle& trace, const TokenMetric& metric,
                              std::span<const NamedRule> rules, std::size_t repeats,
                              std::size_t warmup = 1);

void write_latency_csv(std::ostream& out, std::span<const LatencyRow> rows);

}  // namespace topw
