#include "topw/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace topw {

const char* to_string(Regime regime) {
  return regime == Regime::Prefix ? "prefix" : "singleton";
}

namespace {

// Strict "a ranks ahead of b" for equal primary scores.
bool tie_ahead(const ScoredPool& s, std::size_t a, std::size_t b) {
  if (s.probs[a] != s.probs[b]) return s.probs[a] > s.probs[b];
  return s.tokens[a] < s.tokens[b];
}

void require_nonempty(const ScoredPool& scored, const char* who) {
  if (scored.size() == 0) throw std::invalid_argument(std::string(who) + ": empty pool");
}

}  // namespace

std::vector<std::size_t> phi_order(const ScoredPool& scored, TieBreak /*tiebreak*/) {
  std::vector<std::size_t> order(scored.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scored.phi[a] != scored.phi[b]) return scored.phi[a] > scored.phi[b];
    return tie_ahead(scored, a, b);
  });
  return order;
}

PrefixScan prefix_scan(const ScoredPool& scored, const ObjectiveParams& params, TieBreak tiebreak) {
  require_nonempty(scored, "prefix_scan");
  const double c = params.mass_coefficient();
  PrefixScan scan;
  scan.order = phi_order(scored, tiebreak);
  const std::size_t n = scan.order.size();
  scan.gamma_prefix.resize(n);
  scan.phi_mass_prefix.resize(n);
  scan.objective.resize(n);
  double gamma = 0.0, phi_mass = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t pos = scan.order[k];
    gamma += scored.probs[pos];
    phi_mass += scored.probs[pos] * scored.phi[pos];
    scan.gamma_prefix[k] = gamma;
    scan.phi_mass_prefix[k] = phi_mass;
    scan.objective[k] = phi_mass / gamma + c * std::log(gamma);
    if (scan.objective[k] > best) {
      best = scan.objective[k];
      scan.best_size = k + 1;
    }
  }
  return scan;
}

SelectionResult s_step(const ScoredPool& scored, const ObjectiveParams& params, TieBreak tiebreak) {
  require_nonempty(scored, "s_step");
  params.validate();
  const double c = params.mass_coefficient();
  SelectionResult out;

  if (c > 0.0) {
    const PrefixScan scan = prefix_scan(scored, params, tiebreak);
    out.regime = Regime::Prefix;
    out.positions.assign(scan.order.begin(), scan.order.begin() + scan.best_size);
    out.value = scan.objective[scan.best_size - 1];
    out.crop.gamma = scan.gamma_prefix[scan.best_size - 1];
  } else {
    out.regime = Regime::Singleton;
    std::size_t best = 0;
    double best_score = scored.phi[0] + c * scored.logprobs[0];
    for (std::size_t k = 1; k < scored.size(); ++k) {
      const double score = scored.phi[k] + c * scored.logprobs[k];
      if (score > best_score || (score == best_score && tie_ahead(scored, k, best))) {
        best = k;
        best_score = score;
      }
    }
    out.positions = {best};
    out.value = best_score;
    out.crop.gamma = scored.probs[best];
  }
  out.crop.members.reserve(out.positions.size());
  for (const std::size_t pos : out.positions) out.crop.members.push_back(scored.tokens[pos]);
  return out;
}

LazySelection lazy_s_step(const ScoredPool& scored, std::span<const std::size_t> known,
                          std::span<const double> known_f, double f_upper,
                          const PotentialOracle& oracle, const ObjectiveParams& params,
                          TieBreak tiebreak) {
  require_nonempty(scored, "lazy_s_step");
  params.validate();
  const std::size_t m = scored.size();
  if (known.size() != known_f.size()) {
    throw std::invalid_argument("lazy_s_step: known positions and values differ in length");
  }
  for (std::size_t k = 1; k < m; ++k) {
    if (scored.probs[k] > scored.probs[k - 1]) {
      throw std::invalid_argument("lazy_s_step: pool must be in nonincreasing probability order");
    }
  }
  const double c = params.mass_coefficient();
  const double coef = c > 0.0 ? params.lambda : params.beta;
  const double slack = std::max(c, 0.0);

  std::vector<char> in_sub(m, 0);
  ScoredPool sub;
  std::vector<std::size_t> sub_pos;
  auto admit = [&](std::size_t pos, double f) {
    if (pos >= m) throw std::out_of_range("lazy_s_step: position out of range");
    if (in_sub[pos]) throw std::invalid_argument("lazy_s_step: duplicate known position");
    in_sub[pos] = 1;
    sub_pos.push_back(pos);
    sub.tokens.push_back(scored.tokens[pos]);
    sub.probs.push_back(scored.probs[pos]);
    sub.logprobs.push_back(scored.logprobs[pos]);
    sub.potential.push_back(f);
    sub.phi.push_back(f + params.lambda * scored.logprobs[pos]);
  };
  for (std::size_t k = 0; k < known.size(); ++k) admit(known[k], known_f[k]);

  LazySelection out;
  std::size_t cursor = 0;
  std::size_t block = 16;
  bool exhausted = false;
  std::vector<std::size_t> batch;
  std::vector<double> values;
  while (true) {
    double threshold = -std::numeric_limits<double>::infinity();
    if (sub.size() > 0) {
      out.result = s_step(sub, params, tiebreak);
      threshold = out.result.value - slack;
      // Conservative margin so rounding never prunes a token that could tie.
      threshold -= 1e-9 * (1.0 + std::abs(threshold));
    }
    batch.clear();
    for (; !exhausted && cursor < m && batch.size() < block; ++cursor) {
      if (in_sub[cursor]) continue;
      // Bounds only decrease along the pool, so the first miss ends the search.
      exhausted = f_upper + coef * scored.logprobs[cursor] < threshold;
      if (!exhausted) batch.push_back(cursor);
    }
    if (batch.empty()) break;
    values.assign(batch.size(), 0.0);
    oracle(batch, values);
    out.evaluated += batch.size();
    for (std::size_t k = 0; k < batch.size(); ++k) {
      if (values[k] > f_upper) {
        throw std::invalid_argument("lazy_s_step: oracle value exceeds the declared upper bound");
      }
      admit(batch[k], values[k]);
    }
    block *= 2;
  }
  for (auto& pos : out.result.positions) pos = sub_pos[pos];
  return out;
}

BruteForceResult brute_force_s_step(const ScoredPool& scored, const ObjectiveParams& params) {
  require_nonempty(scored, "brute_force_s_step");
  const std::size_t n = scored.size();
  if (n > kMaxBruteForcePool) {
    throw std::length_error("brute_force_s_step: pool of " + std::to_string(n) +
                            " exceeds the enumeration cap of " +
                            std::to_string(kMaxBruteForcePool));
  }
  const double c = params.mass_coefficient();
  auto tokens_of = [&](std::uint32_t mask) {
    std::vector<TokenId> t;
    for (std::size_t k = 0; k < n; ++k) {
      if (mask & (1u << k)) t.push_back(scored.tokens[k]);
    }
    std::sort(t.begin(), t.end());
    return t;
  };

  BruteForceResult out;
  out.value = -std::numeric_limits<double>::infinity();
  std::uint32_t best_mask = 0;
  const std::uint32_t limit = 1u << n;
  for (std::uint32_t mask = 1; mask < limit; ++mask) {
    double gamma = 0.0, phi_mass = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (mask & (1u << k)) {
        gamma += scored.probs[k];
        phi_mass += scored.probs[k] * scored.phi[k];
      }
    }
    const double value = phi_mass / gamma + c * std::log(gamma);
    if (value > out.value || (value == out.value && tokens_of(mask) < tokens_of(best_mask))) {
      out.value = value;
      best_mask = mask;
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (best_mask & (1u << k)) out.positions.push_back(k);
  }
  out.tokens = tokens_of(best_mask);
  return out;
}

std::vector<double> beta_sweep_gammas(const ScoredPool& scored, double lambda,
                                      std::span<const double> betas, TieBreak tiebreak) {
  std::vector<double> out;
  out.reserve(betas.size());
  for (std::size_t k = 0; k < betas.size(); ++k) {
    if (betas[k] < lambda) {
      throw std::invalid_argument("beta_sweep_gammas: beta " + std::to_string(betas[k]) +
                                  " below lambda " + std::to_string(lambda));
    }
    if (k > 0 && betas[k] < betas[k - 1]) {
      throw std::invalid_argument("beta_sweep_gammas: betas must be ascending");
    }
    out.push_back(s_step(scored, ObjectiveParams{lambda, betas[k]}, tiebreak).crop.gamma);
  }
  return out;
}

ShiftCheck shift_check(const ScoredPool& scored, const ObjectiveParams& params, TieBreak tiebreak,
                       double c) {
  ScoredPool shifted = scored;
  for (std::size_t k = 0; k < shifted.size(); ++k) {
    shifted.potential[k] = scored.potential[k] + c;
    shifted.phi[k] = shifted.potential[k] + params.lambda * shifted.logprobs[k];
  }
  const SelectionResult base = s_step(scored, params, tiebreak);
  const SelectionResult moved = s_step(shifted, params, tiebreak);
  ShiftCheck out;
  out.same_set = base.crop.sorted_members() == moved.crop.sorted_members();
  out.value_shift = moved.value - base.value;
  out.ok = out.same_set && std::abs(out.value_shift - c) <= 1e-9;
  return out;
}

}  // namespace topw
