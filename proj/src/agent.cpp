#include "riskelicit/agent.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numeric>

#include "riskelicit/errors.hpp"

namespace riskelicit {

namespace {

void check_dims(const CostFunction& cost, std::size_t num_states) {
  if (cost.size() != num_states) throw DomainError("cost function and environment disagree on |X|");
}

// Ascending order of `values`, by insertion sort (state spaces are small).
void sort_order(std::span<const double> values, std::vector<std::size_t>& order) {
  order.resize(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 1; i < order.size(); ++i) {
    const std::size_t key = order[i];
    std::size_t j = i;
    while (j > 0 && values[order[j - 1]] > values[key]) {
      order[j] = order[j - 1];
      --j;
    }
    order[j] = key;
  }
}

double min_continuation(const RiskAversionInf& aversion, const ControlledTransition& trans,
                        std::span<const double> values, std::span<const std::size_t> order, std::size_t state) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < trans.num_actions(); ++a) {
    best = std::min(best, rho_outcomes_sorted(aversion.spectrum, values, trans.row(a, state), order));
  }
  return best;
}

// Upper bound on iterations; the operator is an r-contraction from V = 0.
std::size_t iteration_cap(double discount, double tol) {
  const double n = std::log(tol * (1.0 - discount)) / std::log(discount);
  return static_cast<std::size_t>(std::max(10.0, 4.0 * n + 100.0));
}

}  // namespace

RiskAversionInf::RiskAversionInf(CostFunction cost_in, Spectrum spectrum_in, double discount_in)
    : cost(std::move(cost_in)), spectrum(std::move(spectrum_in)), discount(discount_in) {
  if (!(discount > 0.0 && discount < 1.0)) throw DomainError("discount must lie strictly inside (0, 1)");
}

std::vector<double> action_risks(const RiskAversion& aversion, const OnePeriodEnv& env) {
  check_dims(aversion.cost, env.num_states());
  std::vector<double> risks(env.num_actions());
  for (std::size_t a = 0; a < env.num_actions(); ++a) {
    risks[a] = rho_outcomes(aversion.spectrum, aversion.cost.costs(), env.column(a));
  }
  return risks;
}

std::size_t argmin_lowest(std::span<const double> objectives) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < objectives.size(); ++a) {
    if (objectives[a] < objectives[best]) best = a;
  }
  return best;
}

bool has_near_tie(std::span<const double> objectives) {
  if (objectives.size() < 2) return false;
  double lo = std::numeric_limits<double>::infinity();
  double second = lo;
  for (double v : objectives) {
    if (v < lo) {
      second = lo;
      lo = v;
    } else if (v < second) {
      second = v;
    }
  }
  return second - lo < kNearTieGap;
}

std::size_t best_action(const RiskAversion& aversion, const OnePeriodEnv& env) {
  return argmin_lowest(action_risks(aversion, env));
}

std::vector<double> continuation_risks(const RiskAversionInf& aversion, const ControlledTransition& trans,
                                       const ValueFunction& values, std::size_t state) {
  check_dims(aversion.cost, trans.num_states());
  std::vector<double> risks(trans.num_actions());
  for (std::size_t a = 0; a < trans.num_actions(); ++a) {
    risks[a] = rho_outcomes(aversion.spectrum, values.values, trans.row(a, state));
  }
  return risks;
}

ValueFunction value_iteration(const RiskAversionInf& aversion, const ControlledTransition& trans, double tol) {
  check_dims(aversion.cost, trans.num_states());
  if (!(tol > 0.0)) throw DomainError("value iteration tolerance must be positive");
  const std::size_t n = trans.num_states();
  const double r = aversion.discount;
  std::vector<double> v(n, 0.0);
  std::vector<double> next(n);
  std::vector<std::size_t> order;
  const std::size_t cap = iteration_cap(r, tol);
  for (std::size_t it = 0; it < cap; ++it) {
    sort_order(v, order);
    double change = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
      next[x] = aversion.cost[x] + r * min_continuation(aversion, trans, v, order, x);
      change = std::max(change, std::abs(next[x] - v[x]));
    }
    v.swap(next);
    if (change < tol) break;
  }
  return {std::move(v)};
}

double bellman_residual(const RiskAversionInf& aversion, const ControlledTransition& trans,
                        const ValueFunction& values) {
  check_dims(aversion.cost, trans.num_states());
  std::vector<std::size_t> order;
  sort_order(values.values, order);
  double worst = 0.0;
  for (std::size_t x = 0; x < trans.num_states(); ++x) {
    const double target = aversion.cost[x] +
                          aversion.discount * min_continuation(aversion, trans, values.values, order, x);
    worst = std::max(worst, std::abs(values.values[x] - target));
  }
  return worst;
}

Policy greedy_policy(const RiskAversionInf& aversion, const ControlledTransition& trans,
                     const ValueFunction& vstar) {
  check_dims(aversion.cost, trans.num_states());
  Policy policy;
  policy.actions.resize(trans.num_states());
  for (std::size_t x = 0; x < trans.num_states(); ++x) {
    policy.actions[x] = argmin_lowest(continuation_risks(aversion, trans, vstar, x));
  }
  return policy;
}

ValueFunction policy_eval(const RiskAversionInf& aversion, const ControlledTransition& trans,
                          const Policy& policy, double tol) {
  check_dims(aversion.cost, trans.num_states());
  if (policy.actions.size() != trans.num_states()) throw DomainError("policy and transition disagree on |X|");
  for (std::size_t a : policy.actions) {
    if (a >= trans.num_actions()) throw DomainError("policy action out of range");
  }
  if (!(tol > 0.0)) throw DomainError("policy evaluation tolerance must be positive");
  const std::size_t n = trans.num_states();
  const double r = aversion.discount;
  std::vector<double> v(n, 0.0);
  std::vector<double> next(n);
  std::vector<std::size_t> order;
  const std::size_t cap = iteration_cap(r, tol);
  for (std::size_t it = 0; it < cap; ++it) {
    sort_order(v, order);
    double change = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
      next[x] = aversion.cost[x] +
                r * rho_outcomes_sorted(aversion.spectrum, v, trans.row(policy.actions[x], x), order);
      change = std::max(change, std::abs(next[x] - v[x]));
    }
    v.swap(next);
    if (change < tol) break;
  }
  return {std::move(v)};
}

// ---------------------------------------------------------------------------
// ValueCache

ValueCache::ValueCache(Key key, std::size_t num_candidates, std::vector<ValueFunction> values)
    : key_(key), num_candidates_(num_candidates), values_(std::move(values)) {
  if (values_.size() != key_.pool_size * num_candidates_) {
    throw ContractError("value cache size does not match pool size x candidates");
  }
}

ValueCache ValueCache::build(const ControlledPool& pool, std::span<const RiskAversionInf> candidates, double tol) {
  std::vector<ValueFunction> values;
  values.reserve(pool.size() * candidates.size());
  for (const auto& trans : pool.items) {
    for (const auto& cand : candidates) values.push_back(value_iteration(cand, trans, tol));
  }
  Key key{pool.seed, pool.size(), candidate_hash(candidates), tol};
  return ValueCache(key, candidates.size(), std::move(values));
}

namespace {

class Fnv1a {
 public:
  void add(double x) { add_u64(std::bit_cast<std::uint64_t>(x == 0.0 ? 0.0 : x)); }
  void add_u64(std::uint64_t x) {
    for (int i = 0; i < 8; ++i) {
      h_ ^= (x >> (8 * i)) & 0xFFu;
      h_ *= 0x100000001B3ULL;
    }
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xCBF29CE484222325ULL;
};

void hash_core(Fnv1a& h, const CostFunction& cost, const Spectrum& spectrum) {
  h.add_u64(cost.size());
  for (double c : cost.costs()) h.add(c);
  h.add_u64(spectrum.atoms().size());
  for (const auto& atom : spectrum.atoms()) {
    h.add(atom.alpha);
    h.add(atom.weight);
  }
}

}  // namespace

std::uint64_t candidate_hash(std::span<const RiskAversionInf> candidates) {
  Fnv1a h;
  h.add_u64(candidates.size());
  for (const auto& c : candidates) {
    hash_core(h, c.cost, c.spectrum);
    h.add(c.discount);
  }
  return h.value();
}

std::uint64_t candidate_hash(std::span<const RiskAversion> candidates) {
  Fnv1a h;
  h.add_u64(candidates.size());
  for (const auto& c : candidates) hash_core(h, c.cost, c.spectrum);
  return h.value();
}

}  // namespace riskelicit
