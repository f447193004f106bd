#include "topw/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace topw {

namespace {

double parse_double(std::string_view text, std::string_view what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("invalid number '" + std::string(text) + "' for " +
                                std::string(what));
  }
  return v;
}

std::size_t parse_size(std::string_view text, std::string_view what) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("invalid integer '" + std::string(text) + "' for " +
                                std::string(what));
  }
  return v;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double crop_entropy_from(const Dist& p, const Crop& crop) {
  double weighted = 0.0;
  for (const TokenId t : crop.members) {
    if (p.prob(t) > 0.0) weighted += p.prob(t) * p.logprob(t);
  }
  return std::max(0.0, -weighted / crop.gamma + std::log(crop.gamma));
}

}  // namespace

WarmStart parse_warm_start(std::string_view spec) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) {
    throw std::invalid_argument("warm start must be nucleus:<threshold> or top_k:<k>");
  }
  const std::string_view kind = spec.substr(0, colon);
  const std::string_view value = spec.substr(colon + 1);
  if (kind == "nucleus") return WarmStart::nucleus(parse_double(value, "warm start threshold"));
  if (kind == "top_k") return WarmStart::top_k(parse_size(value, "warm start k"));
  throw std::invalid_argument("unknown warm start rule '" + std::string(kind) + "'");
}

NamedRule parse_rule(std::string_view spec, const TopWConfig& topw_defaults) {
  if (spec == "topw") {
    topw_defaults.validate();
    return {"topw", topw_defaults};
  }
  const auto eq = spec.find('=');
  if (eq == std::string_view::npos) {
    throw std::invalid_argument("rule '" + std::string(spec) +
                                "' must be topw, top_k=K, top_p=P, min_p=R or top_h=A");
  }
  const std::string_view kind = spec.substr(0, eq);
  const std::string_view value = spec.substr(eq + 1);
  BaselineConfig cfg;
  cfg.sel_temperature = topw_defaults.sel_temperature;
  if (kind == "top_k") {
    cfg.rule = TopK{parse_size(value, "top_k")};
  } else if (kind == "top_p") {
    cfg.rule = TopP{parse_double(value, "top_p")};
  } else if (kind == "min_p") {
    cfg.rule = MinP{parse_double(value, "min_p")};
  } else if (kind == "top_h") {
    cfg.rule = TopH{parse_double(value, "top_h")};
  } else {
    throw std::invalid_argument("unknown rule '" + std::string(kind) + "'");
  }
  cfg.validate();
  return {std::string(spec), cfg};
}

RuleOutcome apply_rule(const NamedRule& rule, std::span<const float> logits,
                       const TokenMetric& metric) {
  RuleOutcome out;
  if (const auto* topw = std::get_if<TopWConfig>(&rule.config)) {
    DecodeResult r = process_logits(logits, metric, *topw);
    out.masked_logits = std::move(r.masked_logits);
    out.crop = std::move(r.report.crop);
    out.crop_entropy = r.report.crop_entropy;
    out.regime = r.report.regime_per_iter.empty() ? "prefix" : to_string(r.report.regime_per_iter.back());
    out.iterations_used = r.report.iterations_used;
  } else {
    const auto& cfg = std::get<BaselineConfig>(rule.config);
    BaselineResult r = apply_baseline(logits, cfg);
    out.masked_logits = std::move(r.masked_logits);
    out.crop = std::move(r.crop);
    out.crop_entropy = crop_entropy_from(from_logits(logits, cfg.sel_temperature), out.crop);
    out.regime = "baseline";
  }
  return out;
}

std::vector<StepStatsRow> run(const TraceBundle& trace, const TokenMetric& metric,
                              std::span<const NamedRule> rules, const RunOptions& options) {
  if (rules.empty()) throw std::invalid_argument("run: at least one rule is required");
  if (metric.size() != trace.meta.n) {
    throw std::invalid_argument("run: metric does not match the trace vocabulary");
  }
  std::vector<StepStatsRow> rows;
  rows.reserve(trace.meta.steps * rules.size());
  for (std::size_t s = 0; s < trace.meta.steps; ++s) {
    for (const NamedRule& rule : rules) {
      const auto t0 = std::chrono::steady_clock::now();
      const RuleOutcome o = apply_rule(rule, trace.step_logits(s), metric);
      const auto t1 = std::chrono::steady_clock::now();
      StepStatsRow row;
      row.step = s;
      row.rule = rule.name;
      row.crop_size = o.crop.size();
      row.gamma = o.crop.gamma;
      row.crop_entropy = o.crop_entropy;
      row.regime = o.regime;
      row.iterations_used = o.iterations_used;
      row.elapsed_us = options.golden
                           ? 0
                           : std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0).count();
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_stats_csv(std::ostream& out, std::span<const StepStatsRow> rows) {
  out << "step,rule,crop_size,gamma,crop_entropy,regime,iterations_used,elapsed_us\n";
  for (const auto& r : rows) {
    out << r.step << ',' << r.rule << ',' << r.crop_size << ',' << fmt_double(r.gamma) << ','
        << fmt_double(r.crop_entropy) << ',' << r.regime << ',' << r.iterations_used << ','
        << r.elapsed_us << '\n';
  }
}

SweepResult sweep(const TraceBundle& trace, const TokenMetric& metric,
                  std::span<const double> lambda_grid, std::span<const double> beta_grid,
                  const TopWConfig& base) {
  if (lambda_grid.empty() || beta_grid.empty()) {
    throw std::invalid_argument("sweep: lambda and beta grids must be nonempty");
  }
  std::vector<double> betas(beta_grid.begin(), beta_grid.end());
  std::sort(betas.begin(), betas.end());
  const std::size_t steps = trace.meta.steps;

  SweepResult result;
  for (const double lambda : lambda_grid) {
    std::vector<double> prev_gamma;
    double prev_beta = 0.0;
    bool have_prev = false;
    for (const double beta : betas) {
      TopWConfig cfg = base;
      cfg.lambda = lambda;
      cfg.beta = beta;
      cfg.validate();
      SweepRow row;
      row.lambda = lambda;
      row.beta = beta;
      std::vector<double> gammas(steps);
      for (std::size_t s = 0; s < steps; ++s) {
        const DecodeResult r = process_logits(trace.step_logits(s), metric, cfg);
        gammas[s] = r.report.gamma;
        row.mean_gamma += r.report.gamma;
        row.mean_crop_size += static_cast<double>(r.report.crop.size());
        row.mean_entropy += r.report.crop_entropy;
      }
      row.mean_gamma /= static_cast<double>(steps);
      row.mean_crop_size /= static_cast<double>(steps);
      row.mean_entropy /= static_cast<double>(steps);

      row.monotone = "n/a";
      if (have_prev && beta >= lambda && prev_beta >= lambda) {
        bool ok = true;
        for (std::size_t s = 0; s < steps; ++s) ok = ok && gammas[s] >= prev_gamma[s];
        if (cfg.alt_iters == 1) {
          row.monotone = ok ? "ok" : "violated";
          if (!ok) ++result.monotonicity_violations;
        } else {
          row.monotone = "unasserted";
        }
      }
      prev_gamma = std::move(gammas);
      prev_beta = beta;
      have_prev = true;
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  out << "lambda,beta,mean_gamma,mean_crop_size,mean_entropy,gamma_monotone\n";
  for (const auto& r : result.rows) {
    out << fmt_double(r.lambda) << ',' << fmt_double(r.beta) << ',' << fmt_double(r.mean_gamma)
        << ',' << fmt_double(r.mean_crop_size) << ',' << fmt_double(r.mean_entropy) << ','
        << r.monotone << '\n';
  }
}

std::vector<LatencyRow> bench(const TraceBundle& trace, const TokenMetric& metric,
                              std::span<const NamedRule> rules, std::size_t repeats,
                              std::size_t warmup) {
  if (repeats < 3) throw std::invalid_argument("bench: repeats must be >= 3");
  if (rules.empty()) throw std::invalid_argument("bench: at least one rule is required");
  std::vector<LatencyRow> rows;
  for (const NamedRule& rule : rules) {
    const auto call = [&](std::size_t s) -> std::size_t {
      const auto logits = trace.step_logits(s);
      if (const auto* topw = std::get_if<TopWConfig>(&rule.config)) {
        return process_logits(logits, metric, *topw).report.crop.size();
      }
      return apply_baseline(logits, std::get<BaselineConfig>(rule.config)).crop.size();
    };
    volatile std::size_t sink = 0;
    for (std::size_t w = 0; w < warmup; ++w) {
      for (std::size_t s = 0; s < trace.meta.steps; ++s) sink = sink + call(s);
    }
    std::vector<double> samples;
    samples.reserve(repeats * trace.meta.steps);
    for (std::size_t r = 0; r < repeats; ++r) {
      for (std::size_t s = 0; s < trace.meta.steps; ++s) {
        const auto t0 = std::chrono::steady_clock::now();
        sink = sink + call(s);
        const auto t1 = std::chrono::steady_clock::now();
        samples.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
      }
    }
    std::sort(samples.begin(), samples.end());
    LatencyRow row;
    row.rule = rule.name;
    row.samples = samples.size();
    for (const double v : samples) row.mean_us += v;
    row.mean_us /= static_cast<double>(samples.size());
    const std::size_t n = samples.size();
    row.median_us = n % 2 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
    const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(n)));
    row.p99_us = samples[std::min(n, std::max<std::size_t>(rank, 1)) - 1];
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_latency_csv(std::ostream& out, std::span<const LatencyRow> rows) {
  out << "rule,samples,mean_us,median_us,p99_us\n";
  for (const auto& r : rows) {
    out << r.rule << ',' << r.samples << ',' << fmt_double(r.mean_us) << ','
        << fmt_double(r.median_us) << ',' << fmt_double(r.p99_us) << '\n';
  }
}

}  // namespace topw
