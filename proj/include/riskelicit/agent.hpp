#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "riskelicit/environments.hpp"
#include "riskelicit/risk.hpp"

namespace riskelicit {

/// Default sup-norm stopping tolerance for value iteration.
inline constexpr double kDefaultValueTol = 1e-6;
/// Two action objectives closer than this are reported as a near tie.
inline constexpr double kNearTieGap = 1e-10;

/// One-period risk aversion (C, mu).
struct RiskAversion {
  CostFunction cost;
  Spectrum spectrum;

  bool operator==(const RiskAversion&) const = default;
};

/// Infinite-horizon risk aversion (C, mu, r); r strictly inside (0, 1).
struct RiskAversionInf {
  RiskAversionInf(CostFunction cost, Spectrum spectrum, double discount);

  CostFunction cost;
  Spectrum spectrum;
  double discount;

  RiskAversion one_period() const { return {cost, spectrum}; }
  bool operator==(const RiskAversionInf&) const = default;
};

struct ValueFunction {
  std::vector<double> values;
};

/// Deterministic stationary policy: an action per state.
struct Policy {
  std::vector<std::size_t> actions;
  bool operator==(const Policy&) const = default;
};

/// rho_mu(C(X^a)) for every action a of `env`.
std::vector<double> action_risks(const RiskAversion& aversion, const OnePeriodEnv& env);

/// argmin over actions of rho_mu(C(X^a)); lowest index on ties.
std::size_t best_action(const RiskAversion& aversion, const OnePeriodEnv& env);

/// Index of the smallest entry, lowest index on ties.
std::size_t argmin_lowest(std::span<const double> objectives);

/// True when the two smallest objectives differ by less than kNearTieGap.
bool has_near_tie(std::span<const double> objectives);

/// rho_mu(V(X^{x,a})) for every action a at `state`.
std::vector<double> continuation_risks(const RiskAversionInf& aversion, const ControlledTransition& trans,
                                       const ValueFunction& values, std::size_t state);

/// Fixed point of V = C + r min_a rho_mu(V(X^{x,a})), iterated from V = 0
/// until the sup-norm change drops below tol.
ValueFunction value_iteration(const RiskAversionInf& aversion, const ControlledTransition& trans,
                              double tol = kDefaultValueTol);

/// sup_x |V(x) - C(x) - r min_a rho_mu(V(X^{x,a}))|.
double bellman_residual(const RiskAversionInf& aversion, const ControlledTransition& trans,
                        const ValueFunction& values);

/// Per state argmin_a rho_mu(V*(X^{x,a})); lowest index on ties.
Policy greedy_policy(const RiskAversionInf& aversion, const ControlledTransition& trans,
                     const ValueFunction& vstar);

/// Fixed point of V = C + r rho_mu(V(X^{x,pi(x)})), iterated from V = 0.
ValueFunction policy_eval(const RiskAversionInf& aversion, const ControlledTransition& trans,
                          const Policy& policy, double tol = kDefaultValueTol);

/// Optimal value functions for every (pool item, candidate) pair.
///
/// Built once before a learning loop and read-only afterwards. The key
/// (pool seed, pool size, candidate hash, tolerance) identifies a sidecar file
/// that can be reloaded instead of recomputed.
class ValueCache {
 public:
  struct Key {
    std::uint64_t pool_seed = 0;
    std::size_t pool_size = 0;
    std::uint64_t candidate_hash = 0;
    double tol = kDefaultValueTol;
    bool operator==(const Key&) const = default;
  };

  ValueCache() = default;
  ValueCache(Key key, std::size_t num_candidates, std::vector<ValueFunction> values);

  static ValueCache build(const ControlledPool& pool, std::span<const RiskAversionInf> candidates,
                          double tol = kDefaultValueTol);

  const ValueFunction& at(std::size_t pool_index, std::size_t candidate) const {
    return values_[pool_index * num_candidates_ + candidate];
  }
  const Key& key() const { return key_; }
  std::size_t num_candidates() const { return num_candidates_; }
  std::size_t pool_size() const { return key_.pool_size; }

 private:
  Key key_;
  std::size_t num_candidates_ = 0;
  std::vector<ValueFunction> values_;  // [pool][candidate]
};

/// Stable FNV-1a hash of a candidate set's numeric content.
std::uint64_t candidate_hash(std::span<const RiskAversionInf> candidates);
std::uint64_t candidate_hash(std::span<const RiskAversion> candidates);

}  // namespace riskelicit
