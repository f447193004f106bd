#include "topw/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace topw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<TokenId> mass_support(const Dist& d) {
  std::vector<TokenId> out;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.prob(static_cast<TokenId>(i)) >= kTransportMassFloor) out.push_back(static_cast<TokenId>(i));
  }
  return out;
}

std::size_t joint_support_size(const std::vector<TokenId>& a, const std::vector<TokenId>& b) {
  std::vector<TokenId> u;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(u));
  return u.size();
}

}  // namespace

GroundMetric::GroundMetric(const TokenMetric& metric)
    : fn_([m = &metric](TokenId i, TokenId j) { return m->distance(i, j); }) {}

GroundMetric::GroundMetric(std::function<double(TokenId, TokenId)> fn) : fn_(std::move(fn)) {}

GroundMetric uniform_metric() {
  return GroundMetric([](TokenId i, TokenId j) { return i == j ? 0.0 : 1.0; });
}

GroundMetric scaled_metric(GroundMetric base, double alpha) {
  return GroundMetric([base = std::move(base), alpha](TokenId i, TokenId j) {
    return alpha * base(i, j);
  });
}

W1Result w1_exact(const Dist& P, const Dist& Q, const GroundMetric& metric) {
  if (P.size() != Q.size()) {
    throw std::invalid_argument("w1_exact: distributions over different vocabularies");
  }
  const std::vector<TokenId> src = mass_support(P);
  const std::vector<TokenId> snk = mass_support(Q);
  const std::size_t joint = joint_support_size(src, snk);
  if (joint > kMaxExactSupport) {
    throw std::length_error("w1_exact: joint support " + std::to_string(joint) + " exceeds " +
                            std::to_string(kMaxExactSupport) +
                            "; use the fixed-potential surrogate instead of exact transport");
  }

  const std::size_t a = src.size();
  const std::size_t b = snk.size();
  std::vector<double> cost(a * b);
  for (std::size_t r = 0; r < a; ++r) {
    for (std::size_t c = 0; c < b; ++c) cost[r * b + c] = metric(src[r], snk[c]);
  }
  std::vector<double> supply(a), demand(b);
  for (std::size_t r = 0; r < a; ++r) supply[r] = P.prob(src[r]);
  for (std::size_t c = 0; c < b; ++c) demand[c] = Q.prob(snk[c]);

  std::vector<double> flow(a * b, 0.0);
  // Nodes: sources [0, a), sinks [a, a + b).
  const std::size_t nodes = a + b;
  std::vector<double> pot(nodes, 0.0);
  std::vector<double> dist(nodes);
  std::vector<std::ptrdiff_t> prev(nodes);
  std::vector<char> done(nodes);

  for (;;) {
    bool any_supply = false, any_demand = false;
    for (double s : supply) any_supply |= s > 0.0;
    for (double d : demand) any_demand |= d > 0.0;
    if (!any_supply || !any_demand) break;

    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(prev.begin(), prev.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    for (std::size_t r = 0; r < a; ++r) {
      if (supply[r] > 0.0) dist[r] = 0.0;
    }
    for (std::size_t iter = 0; iter < nodes; ++iter) {
      std::size_t u = nodes;
      for (std::size_t v = 0; v < nodes; ++v) {
        if (!done[v] && dist[v] < kInf && (u == nodes || dist[v] < dist[u])) u = v;
      }
      if (u == nodes) break;
      done[u] = 1;
      if (u < a) {
        for (std::size_t c = 0; c < b; ++c) {
          const double red = std::max(0.0, cost[u * b + c] + pot[u] - pot[a + c]);
          if (dist[u] + red < dist[a + c]) {
            dist[a + c] = dist[u] + red;
            prev[a + c] = static_cast<std::ptrdiff_t>(u);
          }
        }
      } else {
        const std::size_t c = u - a;
        for (std::size_t r = 0; r < a; ++r) {
          if (flow[r * b + c] <= 0.0) continue;
          const double red = std::max(0.0, -cost[r * b + c] + pot[u] - pot[r]);
          if (dist[u] + red < dist[r]) {
            dist[r] = dist[u] + red;
            prev[r] = static_cast<std::ptrdiff_t>(u);
          }
        }
      }
    }

    std::size_t target = nodes;
    for (std::size_t c = 0; c < b; ++c) {
      if (demand[c] > 0.0 && dist[a + c] < kInf &&
          (target == nodes || dist[a + c] < dist[target])) {
        target = a + c;
      }
    }
    if (target == nodes) break;

    double reach = 0.0;
    for (double d : dist) {
      if (d < kInf) reach = std::max(reach, d);
    }
    for (std::size_t v = 0; v < nodes; ++v) pot[v] += dist[v] < kInf ? dist[v] : reach;

    // Walk back to the originating source, collecting the bottleneck.
    std::size_t start = target;
    double delta = demand[target - a];
    for (std::size_t v = target; prev[v] >= 0; v = static_cast<std::size_t>(prev[v])) {
      const auto u = static_cast<std::size_t>(prev[v]);
      if (u >= a) delta = std::min(delta, flow[v * b + (u - a)]);  // reverse arc sink u -> source v
      start = u;
    }
    delta = std::min(delta, supply[start]);

    for (std::size_t v = target; prev[v] >= 0; v = static_cast<std::size_t>(prev[v])) {
      const auto u = static_cast<std::size_t>(prev[v]);
      if (u < a) {
        flow[u * b + (v - a)] += delta;
      } else {
        double& f = flow[v * b + (u - a)];
        f = f - delta <= 0.0 ? 0.0 : f - delta;
      }
    }
    supply[start] = supply[start] - delta <= 0.0 ? 0.0 : supply[start] - delta;
    demand[target - a] = demand[target - a] - delta <= 0.0 ? 0.0 : demand[target - a] - delta;
    if (delta == 0.0) break;
  }

  W1Result out;
  out.plan.sources = src;
  out.plan.targets = snk;
  double total = 0.0;
  for (std::size_t k = 0; k < flow.size(); ++k) total += flow[k] * cost[k];
  out.plan.flows = std::move(flow);
  out.plan.cost = total;
  out.value = total;

  // Node labels on the final residual graph give the dual pair (a_r, b_c);
  // the c-transform turns them into one 1-Lipschitz potential.
  std::vector<double> label(nodes, 0.0);
  for (std::size_t pass = 0; pass < nodes; ++pass) {
    bool changed = false;
    for (std::size_t r = 0; r < a; ++r) {
      for (std::size_t c = 0; c < b; ++c) {
        const double w = cost[r * b + c];
        if (label[r] + w < label[a + c]) {
          label[a + c] = label[r] + w;
          changed = true;
        }
        if (out.plan.flows[r * b + c] > 0.0 && label[a + c] - w < label[r]) {
          label[r] = label[a + c] - w;
          changed = true;
        }
      }
    }
    if (!changed) break;
  }
  out.dual.assign(P.size(), 0.0);
  for (std::size_t x = 0; x < P.size(); ++x) {
    double best = kInf;
    for (std::size_t c = 0; c < b; ++c) {
      best = std::min(best, metric(static_cast<TokenId>(x), snk[c]) - label[a + c]);
    }
    out.dual[x] = b == 0 ? 0.0 : best;
  }
  return out;
}

double w1_uniform_metric(const Dist& p, std::span<const TokenId> set) {
  if (set.empty()) throw std::invalid_argument("w1_uniform_metric: empty token set");
  const double gamma = retained_mass(p, set);
  if (!(gamma > 0.0)) throw std::invalid_argument("w1_uniform_metric: zero retained mass");
  return 1.0 - gamma;
}

LipschitzCheck check_lipschitz(std::span<const double> values, const GroundMetric& metric,
                               std::span<const TokenId> tokens) {
  if (values.size() != tokens.size()) {
    throw std::invalid_argument("check_lipschitz: values and tokens differ in length");
  }
  LipschitzCheck out;
  out.worst_excess = -kInf;
  for (std::size_t x = 0; x < tokens.size(); ++x) {
    for (std::size_t y = x + 1; y < tokens.size(); ++y) {
      const double d = metric(tokens[x], tokens[y]);
      const double diff = std::abs(values[x] - values[y]);
      const double excess = diff - d;
      if (excess > out.worst_excess) {
        out.worst_excess = excess;
        out.worst_i = tokens[x];
        out.worst_j = tokens[y];
      }
      if (diff > d * (1.0 + 1e-9) + 1e-12) out.feasible = false;
    }
  }
  if (tokens.size() < 2) out.worst_excess = 0.0;
  return out;
}

double Factorization::residual() const { return std::abs(direct - factored); }

Factorization factorization_residual(const Dist& p, std::span<const TokenId> set,
                                     const GroundMetric& metric) {
  const CropResult kept = crop(p, set);
  const std::vector<TokenId> rest = complement(p.size(), set);
  const double rest_mass = retained_mass(p, rest);
  if (!(rest_mass > 0.0) || !(kept.crop.gamma < 1.0)) {
    throw std::invalid_argument(
        "factorization_residual: requires 0 < Gamma_S < 1 (complement carries no mass)");
  }
  Factorization out;
  out.direct = w1_exact(p, kept.q, metric).value;
  const Dist outside = conditional(p, rest);
  out.factored = (1.0 - kept.crop.gamma) * w1_exact(outside, kept.q, metric).value;
  return out;
}

double kr_dual_gap(const Dist& P, const Dist& Q, std::span<const double> f,
                   const GroundMetric& metric) {
  if (P.size() != Q.size() || f.size() != P.size()) {
    throw std::invalid_argument("kr_dual_gap: size mismatch between P, Q and f");
  }
  std::vector<TokenId> joint;
  std::vector<double> fv;
  for (std::size_t i = 0; i < P.size(); ++i) {
    const auto t = static_cast<TokenId>(i);
    if (P.prob(t) > 0.0 || Q.prob(t) > 0.0) {
      joint.push_back(t);
      fv.push_back(f[i]);
    }
  }
  const LipschitzCheck check = check_lipschitz(fv, metric, joint);
  if (!check.feasible) {
    throw std::invalid_argument("kr_dual_gap: potential violates 1-Lipschitz on pair (" +
                                std::to_string(check.worst_i) + ", " +
                                std::to_string(check.worst_j) + ")");
  }
  const double w1 = w1_exact(P, Q, metric).value;
  double ep = 0.0, eq = 0.0;
  for (const TokenId t : joint) {
    ep += P.prob(t) * f[t];
    eq += Q.prob(t) * f[t];
  }
  return w1 - (ep - eq);
}

}  // namespace topw
