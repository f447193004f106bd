#include "topw/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "topw/objective.hpp"

namespace topw {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::vector<TokenId> positive_tokens(std::span<const double> probs) {
  std::vector<TokenId> idx;
  idx.reserve(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) idx.push_back(static_cast<TokenId>(i));
  }
  return idx;
}

void sort_by_probability(std::span<const double> probs, std::vector<TokenId>& idx) {
  std::sort(idx.begin(), idx.end(), [&](TokenId a, TokenId b) {
    if (probs[a] != probs[b]) return probs[a] > probs[b];
    return a < b;
  });
}

double plogp(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

std::vector<TokenId> mask_tokens(std::uint32_t mask, std::size_t n) {
  std::vector<TokenId> out;
  for (std::size_t k = 0; k < n; ++k) {
    if (mask & (1u << k)) out.push_back(static_cast<TokenId>(k));
  }
  return out;
}

void require_small(const Dist& p, const char* who) {
  if (p.size() > kMaxExhaustiveVocab) {
    throw std::length_error(std::string(who) + ": vocabulary of " + std::to_string(p.size()) +
                            " exceeds the exhaustive cap of " +
                            std::to_string(kMaxExhaustiveVocab));
  }
}

}  // namespace

void BaselineConfig::validate() const {
  if (!(sel_temperature > 0.0) || !std::isfinite(sel_temperature)) {
    throw std::invalid_argument("sel_temperature must be positive and finite");
  }
  std::visit(overloaded{
                 [](const TopK& r) {
                   if (r.k < 1) throw std::invalid_argument("top_k: k must be >= 1");
                 },
                 [](const TopP& r) {
                   if (!(r.threshold > 0.0 && r.threshold <= 1.0))
                     throw std::invalid_argument("top_p: threshold must lie in (0, 1]");
                 },
                 [](const MinP& r) {
                   if (!(r.ratio > 0.0 && r.ratio <= 1.0))
                     throw std::invalid_argument("min_p: ratio must lie in (0, 1]");
                 },
                 [](const TopH& r) {
                   if (!(r.alpha > 0.0 && r.alpha <= 1.0))
                     throw std::invalid_argument("top_h: alpha must lie in (0, 1]");
                 },
             },
             rule);
}

std::string BaselineConfig::describe() const {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const TopK& r) { os << "top_k=" << r.k; },
                 [&](const TopP& r) { os << "top_p=" << r.threshold; },
                 [&](const MinP& r) { os << "min_p=" << r.ratio; },
                 [&](const TopH& r) { os << "top_h=" << r.alpha; },
             },
             rule);
  return os.str();
}

Crop baseline_crop(std::span<const double> probs, const BaselineRule& rule) {
  std::vector<TokenId> idx = positive_tokens(probs);
  if (idx.empty()) throw std::invalid_argument("baseline: no token has positive probability");

  std::visit(overloaded{
                 [&](const TopK& r) {
                   const std::size_t k = std::min(r.k, idx.size());
                   const auto ahead = [&](TokenId a, TokenId b) {
                     if (probs[a] != probs[b]) return probs[a] > probs[b];
                     return a < b;
                   };
                   if (k < idx.size()) {
                     std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k),
                                      idx.end(), ahead);
                     idx.resize(k);
                   }
                   std::sort(idx.begin(), idx.end(), ahead);
                 },
                 [&](const TopP& r) {
                   sort_by_probability(probs, idx);
                   double cum = 0.0;
                   for (std::size_t k = 0; k < idx.size(); ++k) {
                     cum += probs[idx[k]];
                     if (cum >= r.threshold) {
                       idx.resize(k + 1);
                       break;
                     }
                   }
                 },
                 [&](const MinP& r) {
                   double top = 0.0;
                   for (const TokenId t : idx) top = std::max(top, probs[t]);
                   const double floor = r.ratio * top;
                   std::erase_if(idx, [&](TokenId t) { return probs[t] < floor; });
                   sort_by_probability(probs, idx);
                 },
                 [&](const TopH& r) {
                   double h = 0.0;
                   for (const TokenId t : idx) h -= plogp(probs[t]);
                   const double cap = r.alpha * std::max(h, 0.0);
                   sort_by_probability(probs, idx);
                   double gamma = 0.0, weighted = 0.0;
                   std::size_t keep = 0;
                   for (std::size_t k = 0; k < idx.size(); ++k) {
                     const double g = gamma + probs[idx[k]];
                     const double w = weighted + plogp(probs[idx[k]]);
                     const double hk = -w / g + std::log(g);
                     if (k > 0 && hk > cap) break;
                     gamma = g;
                     weighted = w;
                     keep = k + 1;
                   }
                   idx.resize(keep);
                 },
             },
             rule);

  Crop crop;
  crop.members = std::move(idx);
  for (const TokenId t : crop.members) crop.gamma += probs[t];
  return crop;
}

BaselineResult apply_baseline(std::span<const float> logits, const BaselineConfig& config) {
  config.validate();
  const std::size_t n = logits.size();
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double l = logits[i];
    if (std::isnan(l) || l == std::numeric_limits<double>::infinity()) {
      throw std::invalid_argument("apply_baseline: NaN or +inf logit at token " +
                                  std::to_string(i));
    }
    max_logit = std::max(max_logit, l);
  }
  if (max_logit == -std::numeric_limits<double>::infinity()) {
    throw std::invalid_argument("apply_baseline: all logits are -inf");
  }
  std::vector<double> probs(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    probs[i] = std::exp((static_cast<double>(logits[i]) - max_logit) / config.sel_temperature);
    sum += probs[i];
  }
  for (auto& v : probs) v /= sum;

  BaselineResult out;
  out.crop = baseline_crop(probs, config.rule);
  out.masked_logits.assign(n, -std::numeric_limits<float>::infinity());
  for (const TokenId t : out.crop.members) out.masked_logits[t] = logits[t];
  return out;
}

TopKReduction topk_reduction_check(const Dist& p, std::size_t k) {
  require_small(p, "topk_reduction_check");
  if (k == 0) throw std::invalid_argument("topk_reduction_check: k must be >= 1");
  const std::size_t n = p.size();
  const ObjectiveParams zero{0.0, 0.0};

  TopKReduction out;
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_size = 0;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    const std::vector<TokenId> s = mask_tokens(mask, n);
    if (s.size() > k || !(retained_mass(p, s) > 0.0)) continue;
    const double f = eval_F_uniform(p, s, zero);
    // Mass ties within rounding prefer the larger set, then the first found.
    if (f < best - 1e-14 || (std::abs(f - best) <= 1e-14 && s.size() > best_size)) {
      best = f;
      best_size = s.size();
      out.minimizer = s;
    }
  }

  std::vector<TokenId> all(n);
  std::iota(all.begin(), all.end(), TokenId{0});
  sort_by_probability(p.probs(), all);
  all.resize(std::min(k, n));
  std::sort(all.begin(), all.end());
  out.top_k = all;
  out.minimizer_gamma = retained_mass(p, out.minimizer);
  out.top_k_gamma = retained_mass(p, out.top_k);

  // Sets may differ only by swapping equal-probability tokens.
  std::vector<double> only_min, only_top;
  for (const TokenId t : out.minimizer) {
    if (!std::binary_search(out.top_k.begin(), out.top_k.end(), t)) only_min.push_back(p.prob(t));
  }
  for (const TokenId t : out.top_k) {
    if (!std::binary_search(out.minimizer.begin(), out.minimizer.end(), t)) only_top.push_back(p.prob(t));
  }
  std::sort(only_min.begin(), only_min.end());
  std::sort(only_top.begin(), only_top.end());
  std::erase(only_top, 0.0);
  out.matches = std::abs(out.minimizer_gamma - out.top_k_gamma) <= 1e-12 && only_min == only_top;
  return out;
}

TopHLagrangian toph_lagrangian_check(const Dist& p, double lambda) {
  require_small(p, "toph_lagrangian_check");
  const std::size_t n = p.size();
  const ObjectiveParams params{lambda, 0.0};
  params.validate();

  struct Candidate {
    std::uint32_t mask;
    double gamma;
    double entropy;
  };
  std::vector<Candidate> all;
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_idx = 0;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    const std::vector<TokenId> s = mask_tokens(mask, n);
    const double gamma = retained_mass(p, s);
    if (!(gamma > 0.0)) continue;
    const double f = eval_F_uniform(p, s, params);
    all.push_back({mask, gamma, entropy(crop(p, s).q)});
    if (f < best) {
      best = f;
      best_idx = all.size() - 1;
    }
  }
  const Candidate& star = all[best_idx];
  TopHLagrangian out;
  out.minimizer = mask_tokens(star.mask, n);
  out.gamma = star.gamma;
  out.entropy = star.entropy;
  out.pareto_undominated = true;
  for (const Candidate& c : all) {
    if (c.gamma > star.gamma + 1e-12 && c.entropy < star.entropy - 1e-12) {
      out.pareto_undominated = false;
      out.dominating = mask_tokens(c.mask, n);
      break;
    }
  }
  return out;
}

}  // namespace topw
