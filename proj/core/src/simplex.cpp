#include "topw/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace topw {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_set(std::size_t n, std::span<const TokenId> set, const char* who) {
  if (set.empty()) throw std::invalid_argument(std::string(who) + ": empty token set");
  std::vector<bool> seen(n, false);
  for (const TokenId t : set) {
    if (static_cast<std::size_t>(t) >= n) {
      throw std::out_of_range(std::string(who) + ": token " + std::to_string(t) +
                              " outside vocabulary of size " + std::to_string(n));
    }
    if (seen[t]) {
      throw std::invalid_argument(std::string(who) + ": duplicate token " + std::to_string(t));
    }
    seen[t] = true;
  }
}

}  // namespace

Dist make_dist_unchecked(std::vector<double> probs, std::vector<double> logprobs) {
  Dist d;
  d.probs_ = std::move(probs);
  d.logprobs_ = std::move(logprobs);
  return d;
}

Dist Dist::from_probs(std::vector<double> probs) {
  if (probs.empty()) throw std::invalid_argument("Dist: empty probability vector");
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] >= 0.0) || !std::isfinite(probs[i])) {
      throw std::invalid_argument("Dist: invalid probability at token " + std::to_string(i));
    }
    total += probs[i];
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("Dist: probabilities sum to " + std::to_string(total));
  }
  std::vector<double> logs(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    logs[i] = probs[i] > 0.0 ? std::log(probs[i]) : kNegInf;
  }
  return make_dist_unchecked(std::move(probs), std::move(logs));
}

std::vector<TokenId> Dist::support() const {
  std::vector<TokenId> out;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (probs_[i] > 0.0) out.push_back(static_cast<TokenId>(i));
  }
  return out;
}

Dist from_logits(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw std::invalid_argument("from_logits: temperature must be positive and finite");
  }
  if (logits.empty()) throw std::invalid_argument("from_logits: empty logits");
  double max_logit = kNegInf;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double l = logits[i];
    if (std::isnan(l) || l == std::numeric_limits<double>::infinity()) {
      throw std::invalid_argument("from_logits: NaN or +inf logit at token " + std::to_string(i));
    }
    max_logit = std::max(max_logit, l);
  }
  if (max_logit == kNegInf) throw std::invalid_argument("from_logits: all logits are -inf");

  Dist d;
  d.logprobs_.resize(logits.size());
  d.probs_.resize(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = (logits[i] - max_logit) / temperature;
    d.logprobs_[i] = z;
    sum += std::exp(z);
  }
  const double lse = std::log(sum);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (d.logprobs_[i] == kNegInf) {
      d.probs_[i] = 0.0;
      continue;
    }
    d.logprobs_[i] -= lse;
    d.probs_[i] = std::exp(d.logprobs_[i]);
    if (d.probs_[i] == 0.0) d.logprobs_[i] = kNegInf;
  }
  return d;
}

Dist from_logits(std::span<const float> logits, double temperature) {
  std::vector<double> wide(logits.begin(), logits.end());
  return from_logits(std::span<const double>(wide), temperature);
}

bool Crop::contains(TokenId t) const {
  return std::find(members.begin(), members.end(), t) != members.end();
}

std::vector<TokenId> Crop::sorted_members() const {
  std::vector<TokenId> out = members;
  std::sort(out.begin(), out.end());
  return out;
}

double retained_mass(const Dist& p, std::span<const TokenId> set) {
  double g = 0.0;
  for (const TokenId t : set) g += p.prob(t);
  return g;
}

std::vector<TokenId> complement(std::size_t n, std::span<const TokenId> set) {
  std::vector<bool> in(n, false);
  for (const TokenId t : set) {
    if (static_cast<std::size_t>(t) < n) in[t] = true;
  }
  std::vector<TokenId> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!in[i]) out.push_back(static_cast<TokenId>(i));
  }
  return out;
}

CropResult crop(const Dist& p, std::span<const TokenId> set) {
  check_set(p.size(), set, "crop");
  const double gamma = retained_mass(p, set);
  if (!(gamma > 0.0)) {
    throw std::invalid_argument("crop: selected tokens carry zero probability mass");
  }
  std::vector<double> probs(p.size(), 0.0);
  std::vector<double> logs(p.size(), kNegInf);
  const double log_gamma = std::log(gamma);
  for (const TokenId t : set) {
    if (p.prob(t) > 0.0) {
      probs[t] = p.prob(t) / gamma;
      logs[t] = p.logprob(t) - log_gamma;
    }
  }
  CropResult out;
  out.crop.members.assign(set.begin(), set.end());
  out.crop.gamma = gamma;
  out.q = make_dist_unchecked(std::move(probs), std::move(logs));
  return out;
}

double entropy(const Dist& q) {
  double h = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double qi = q.prob(static_cast<TokenId>(i));
    if (qi > 0.0) h -= qi * q.logprob(static_cast<TokenId>(i));
  }
  return std::max(h, 0.0);
}

EntropyIdentity cropped_entropy_identity(const Dist& p, std::span<const TokenId> set) {
  const CropResult c = crop(p, set);
  EntropyIdentity out;
  out.lhs = entropy(c.q);
  double weighted = 0.0;
  for (const TokenId t : set) {
    if (p.prob(t) > 0.0) weighted += p.prob(t) * p.logprob(t);
  }
  out.rhs = -weighted / c.crop.gamma + std::log(c.crop.gamma);
  return out;
}

Dist conditional(const Dist& p, std::span<const TokenId> set) { return crop(p, set).q; }

}  // namespace topw
