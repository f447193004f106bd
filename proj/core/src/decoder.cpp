#include "topw/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace topw {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Pool tokens with their full-vocabulary probabilities, most probable first.
// Potential and phi stay empty; the S-step fills its own copies.
using Pool = ScoredPool;

Pool form_pool(std::span<const float> logits, double temperature, std::size_t top_m) {
  const std::size_t n = logits.size();
  double max_logit = kNegInf;
  for (std::size_t i = 0; i < n; ++i) {
    const double l = logits[i];
    if (std::isnan(l) || l == std::numeric_limits<double>::infinity()) {
      throw std::invalid_argument("process_logits: NaN or +inf logit at token " +
                                  std::to_string(i));
    }
    max_logit = std::max(max_logit, l);
  }
  if (max_logit == kNegInf) throw std::invalid_argument("process_logits: all logits are -inf");

  // Same arithmetic as from_logits so pool probabilities match it bit for bit.
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += std::exp((static_cast<double>(logits[i]) - max_logit) / temperature);
  const double lse = std::log(sum);

  std::vector<TokenId> idx;
  idx.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (logits[i] != -std::numeric_limits<float>::infinity()) idx.push_back(static_cast<TokenId>(i));
  }
  const auto ahead = [&](TokenId a, TokenId b) {
    if (logits[a] != logits[b]) return logits[a] > logits[b];
    return a < b;
  };
  const std::size_t m = std::min(top_m, idx.size());
  if (m < idx.size()) {
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m), idx.end(), ahead);
    idx.resize(m);
  }
  std::sort(idx.begin(), idx.end(), ahead);

  Pool pool;
  pool.tokens.reserve(m);
  pool.probs.reserve(m);
  pool.logprobs.reserve(m);
  for (const TokenId t : idx) {
    const double lp = (static_cast<double>(logits[t]) - max_logit) / temperature - lse;
    const double p = std::exp(lp);
    if (!(p > 0.0)) break;  // sorted by probability: the rest underflow too
    pool.tokens.push_back(t);
    pool.probs.push_back(p);
    pool.logprobs.push_back(lp);
  }
  return pool;
}

std::vector<std::size_t> warm_start_positions(const Pool& pool, const WarmStart& rule) {
  std::size_t count = pool.tokens.size();
  if (rule.kind == WarmStart::Kind::TopK) {
    count = std::min(rule.k, count);
  } else {
    double cum = 0.0;
    for (std::size_t k = 0; k < pool.tokens.size(); ++k) {
      cum += pool.probs[k];
      if (cum >= rule.threshold) {
        count = k + 1;
        break;
      }
    }
  }
  std::vector<std::size_t> out(count);
  std::iota(out.begin(), out.end(), std::size_t{0});
  return out;
}

// f_i = -dist(i, S) for the requested pool positions, via the same kernel
// and reduction order as TokenMetric::batched_dist_to_set.
PotentialOracle attraction_oracle(const TokenMetric& metric, const ScoredPool& pool,
                                  std::span<const TokenId> anchors) {
  return [&metric, &pool, anchors](std::span<const std::size_t> positions, std::span<double> out) {
    std::vector<TokenId> rows(positions.size());
    for (std::size_t k = 0; k < positions.size(); ++k) rows[k] = pool.tokens[positions[k]];
    std::vector<double> block(rows.size() * anchors.size());
    metric.squared_distance_block(rows, anchors, block);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const double* row = block.data() + r * anchors.size();
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < anchors.size(); ++c) best = std::min(best, row[c]);
      out[r] = -std::sqrt(best);
    }
  };
}

std::vector<std::size_t> sorted_copy(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

std::string WarmStart::describe() const {
  std::ostringstream os;
  if (kind == Kind::Nucleus) {
    os << "nucleus:" << threshold;
  } else {
    os << "top_k:" << k;
  }
  return os.str();
}

std::vector<std::string> TopWConfig::validate() const {
  objective().validate();
  if (!(sel_temperature > 0.0) || !std::isfinite(sel_temperature)) {
    throw std::invalid_argument("sel_temperature must be positive and finite");
  }
  if (top_m == 0) throw std::invalid_argument("top_m must be >= 1");
  if (alt_iters == 0) throw std::invalid_argument("alt_iters must be >= 1");
  if (!(epsilon_whiten > 0.0) || !std::isfinite(epsilon_whiten)) {
    throw std::invalid_argument("epsilon_whiten must be positive and finite");
  }
  if (warm_start.kind == WarmStart::Kind::Nucleus &&
      !(warm_start.threshold > 0.0 && warm_start.threshold <= 1.0)) {
    throw std::invalid_argument("warm start nucleus threshold must lie in (0, 1]");
  }
  if (warm_start.kind == WarmStart::Kind::TopK && warm_start.k == 0) {
    throw std::invalid_argument("warm start top_k must be >= 1");
  }
  std::vector<std::string> warnings;
  if (beta <= lambda) {
    warnings.push_back("beta <= lambda: every S-step collapses to a single token");
  }
  return warnings;
}

DecodeResult process_logits(std::span<const float> logits, const TokenMetric& metric,
                            const TopWConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  if (logits.size() != metric.size()) {
    throw std::invalid_argument("process_logits: " + std::to_string(logits.size()) +
                                " logits for a metric over " + std::to_string(metric.size()) +
                                " tokens");
  }
  const Pool pool = form_pool(logits, config.sel_temperature, config.top_m);
  const ObjectiveParams params = config.objective();

  DecodeResult out;
  StepReport& report = out.report;
  report.pool_size = pool.tokens.size();

  std::vector<std::size_t> current = warm_start_positions(pool, config.warm_start);
  SelectionResult step;

  // The attraction potential is 0 on the anchor crop and <= 0 elsewhere.
  auto alternate = [&](std::span<const std::size_t> members) {
    std::vector<TokenId> anchors(members.size());
    for (std::size_t k = 0; k < members.size(); ++k) anchors[k] = pool.tokens[members[k]];
    const std::vector<double> zeros(members.size(), 0.0);
    LazySelection lazy = lazy_s_step(pool, members, zeros, 0.0,
                                     attraction_oracle(metric, pool, anchors), params,
                                     config.tiebreak);
    report.potentials_evaluated += lazy.evaluated;
    return std::move(lazy.result);
  };

  for (std::size_t t = 0; t < config.alt_iters; ++t) {
    step = alternate(current);
    ++report.iterations_used;
    report.regime_per_iter.push_back(step.regime);
    const bool unchanged = sorted_copy(step.positions) == sorted_copy(current);
    current = step.positions;
    if (unchanged) {
      report.converged_early = true;
      break;
    }
  }

  if (config.verify_convergence && report.converged_early) {
    const SelectionResult again = alternate(current);
    if (sorted_copy(again.positions) != sorted_copy(current)) {
      throw std::logic_error("process_logits: crop moved after convergence");
    }
    report.fixed_point_verified = true;
  }

  // The final crop is the last S-step's output, in selection order.
  report.crop.members.reserve(current.size());
  double gamma = 0.0, weighted = 0.0;
  for (const std::size_t pos : current) {
    report.crop.members.push_back(pool.tokens[pos]);
    gamma += pool.probs[pos];
    weighted += pool.probs[pos] * pool.logprobs[pos];
  }
  report.crop.gamma = gamma;
  report.gamma = gamma;
  report.crop_entropy = std::max(0.0, -weighted / gamma + std::log(gamma));

  out.masked_logits.assign(logits.size(), -std::numeric_limits<float>::infinity());
  for (const TokenId t : report.crop.members) out.masked_logits[t] = logits[t];

  report.elapsed = std::chrono::duration_cast<std::chrono::nanoseconds>(
      std::chrono::steady_clock::now() - start);
  return out;
}

TokenId sample_from_masked(std::span<const float> masked_logits, double temperature,
                           std::uint64_t seed) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw std::invalid_argument("sample_from_masked: temperature must be positive and finite");
  }
  double max_logit = kNegInf;
  for (const float l : masked_logits) {
    if (std::isfinite(l)) max_logit = std::max(max_logit, static_cast<double>(l));
  }
  if (max_logit == kNegInf) {
    throw std::invalid_argument("sample_from_masked: no finite logits to sample from");
  }
  std::vector<double> weights(masked_logits.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < masked_logits.size(); ++i) {
    if (std::isfinite(masked_logits[i])) {
      weights[i] = std::exp((static_cast<double>(masked_logits[i]) - max_logit) / temperature);
      total += weights[i];
    }
  }
  std::mt19937_64 rng(seed);
  const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
  double cum = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    cum += weights[i];
    last = i;
    if (u < cum) return static_cast<TokenId>(i);
  }
  return static_cast<TokenId>(last);
}

PoolProbe pool_exactness_probe(const ScoredPool& full, std::size_t top_m,
                               const ObjectiveParams& params, TieBreak tiebreak, PoolOrder order) {
  if (params.beta < params.lambda) {
    throw std::invalid_argument("pool_exactness_probe: requires beta >= lambda");
  }
  if (top_m == 0) throw std::invalid_argument("pool_exactness_probe: top_m must be >= 1");
  const PrefixScan full_scan = prefix_scan(full, params, tiebreak);
  const std::size_t m = std::min(top_m, full.size());

  std::vector<std::size_t> chosen;
  if (order == PoolOrder::Phi) {
    chosen.assign(full_scan.order.begin(), full_scan.order.begin() + static_cast<std::ptrdiff_t>(m));
  } else {
    chosen.resize(full.size());
    std::iota(chosen.begin(), chosen.end(), std::size_t{0});
    std::sort(chosen.begin(), chosen.end(), [&](std::size_t a, std::size_t b) {
      if (full.probs[a] != full.probs[b]) return full.probs[a] > full.probs[b];
      return full.tokens[a] < full.tokens[b];
    });
    chosen.resize(m);
  }

  std::vector<char> in_pool(full.size(), 0);
  for (const std::size_t pos : chosen) in_pool[pos] = 1;
  PoolProbe probe;
  while (probe.covered_prefix < full_scan.order.size() &&
         in_pool[full_scan.order[probe.covered_prefix]]) {
    ++probe.covered_prefix;
  }

  ScoredPool sub;
  for (const std::size_t pos : chosen) {
    sub.tokens.push_back(full.tokens[pos]);
    sub.probs.push_back(full.probs[pos]);
    sub.logprobs.push_back(full.logprobs[pos]);
    sub.potential.push_back(full.potential[pos]);
    sub.phi.push_back(full.phi[pos]);
  }
  const PrefixScan pool_scan = prefix_scan(sub, params, tiebreak);

  probe.full_best_size = full_scan.best_size;
  probe.pool_best_size = pool_scan.best_size;
  probe.hypothesis_holds = probe.covered_prefix >= full_scan.best_size;

  std::vector<TokenId> full_set, pool_set;
  for (std::size_t k = 0; k < full_scan.best_size; ++k) full_set.push_back(full.tokens[full_scan.order[k]]);
  for (std::size_t k = 0; k < pool_scan.best_size; ++k) pool_set.push_back(sub.tokens[pool_scan.order[k]]);
  std::sort(full_set.begin(), full_set.end());
  std::sort(pool_set.begin(), pool_set.end());
  probe.identical = probe.full_best_size == probe.pool_best_size && full_set == pool_set;
  return probe;
}

}  // namespace topw
