#include "topw/objective.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace topw {

void ObjectiveParams::validate() const {
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw std::invalid_argument("lambda must be finite and >= 0");
  }
  if (!std::isfinite(beta) || beta < 0.0) {
    throw std::invalid_argument("beta must be finite and >= 0");
  }
}

namespace {

double weighted_log_sum(const Dist& p, std::span<const TokenId> set) {
  double s = 0.0;
  for (const TokenId t : set) {
    if (p.prob(t) > 0.0) s += p.prob(t) * p.logprob(t);
  }
  return s;
}

}  // namespace

double eval_F_exact(const Dist& p, std::span<const TokenId> set, const ObjectiveParams& params,
                    const GroundMetric& metric) {
  params.validate();
  const CropResult c = crop(p, set);
  const double w1 = w1_exact(p, c.q, metric).value;
  return w1 + params.lambda * entropy(c.q) - params.beta * std::log(c.crop.gamma);
}

double eval_F_expanded(const Dist& p, std::span<const TokenId> set, const ObjectiveParams& params,
                       const GroundMetric& metric) {
  params.validate();
  const CropResult kept = crop(p, set);
  const double gamma = kept.crop.gamma;
  const std::vector<TokenId> rest = complement(p.size(), set);
  double transport = 0.0;
  if (retained_mass(p, rest) > 0.0) {
    const Dist outside = conditional(p, rest);
    transport = (1.0 - gamma) * w1_exact(outside, kept.q, metric).value;
  }
  return transport + (params.lambda - params.beta) * std::log(gamma) -
         params.lambda / gamma * weighted_log_sum(p, set);
}

double eval_F_uniform(const Dist& p, std::span<const TokenId> set, const ObjectiveParams& params) {
  params.validate();
  if (set.empty()) throw std::invalid_argument("eval_F_uniform: empty token set");
  const double gamma = retained_mass(p, set);
  if (!(gamma > 0.0)) throw std::invalid_argument("eval_F_uniform: zero retained mass");
  return 1.0 - gamma + (params.lambda - params.beta) * std::log(gamma) -
         params.lambda / gamma * weighted_log_sum(p, set);
}

ScoredPool combined_scores(const Dist& p, std::span<const TokenId> pool, std::span<const double> f,
                           double lambda) {
  if (f.size() != pool.size()) {
    throw std::invalid_argument("combined_scores: potential has " + std::to_string(f.size()) +
                                " entries for a pool of " + std::to_string(pool.size()));
  }
  ScoredPool out;
  out.tokens.reserve(pool.size());
  for (std::size_t k = 0; k < pool.size(); ++k) {
    const TokenId t = pool[k];
    if (static_cast<std::size_t>(t) >= p.size()) {
      throw std::out_of_range("combined_scores: token " + std::to_string(t) + " out of range");
    }
    const double pt = p.prob(t);
    if (!(pt > 0.0)) {
      ++out.dropped;
      continue;
    }
    out.tokens.push_back(t);
    out.probs.push_back(pt);
    out.logprobs.push_back(p.logprob(t));
    out.potential.push_back(f[k]);
    out.phi.push_back(f[k] + lambda * p.logprob(t));
  }
  return out;
}

SurrogateValue eval_G(const ScoredPool& scored, std::span<const std::size_t> positions,
                      const ObjectiveParams& params) {
  if (positions.empty()) throw std::invalid_argument("eval_G: empty subset");
  SurrogateValue out;
  double phi_mass = 0.0;
  for (const std::size_t k : positions) {
    if (k >= scored.size()) throw std::out_of_range("eval_G: pool position out of range");
    out.gamma += scored.probs[k];
    phi_mass += scored.probs[k] * scored.phi[k];
  }
  out.value = phi_mass / out.gamma + params.mass_coefficient() * std::log(out.gamma);
  for (std::size_t k = 0; k < scored.size(); ++k) out.c_f += scored.probs[k] * scored.potential[k];
  return out;
}

}  // namespace topw
