#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "riskelicit/agent.hpp"
#include "riskelicit/environments.hpp"
#include "riskelicit/rng.hpp"

namespace riskelicit {

using CandidateSet = std::vector<RiskAversion>;
using CandidateSetInf = std::vector<RiskAversionInf>;

/// Throws DomainError unless the set is non-empty with pairwise distinct members.
void validate_candidates(std::span<const RiskAversion> cands);
void validate_candidates(std::span<const RiskAversionInf> cands);

/// Regret of a single action: rho of that action minus the best rho.
double regret_one(std::size_t action, const OnePeriodEnv& env, const RiskAversion& aversion);

/// Per-state regret of action a at state x given the optimal value vstar.
///
/// Evaluated as r (rho_a - min_b rho_b) on V*, which is zero at the greedy
/// action and equals C(x) + r rho_a - V*(x) up to the fixed-point residual.
/// Throws ContractError when that residual at x exceeds 10 tol (stale vstar).
double regret_state(std::size_t state, std::size_t action, const ControlledTransition& trans,
                    const RiskAversionInf& aversion, const ValueFunction& vstar, double tol = kDefaultValueTol);

/// Sum over states of regret_state(x, policy(x)).
double regret_policy(const Policy& policy, const ControlledTransition& trans, const RiskAversionInf& aversion,
                     const ValueFunction& vstar, double tol = kDefaultValueTol);

/// Read-only view of regrets for one (environment, candidate) pair.
///
/// A decision point is the single choice of a one-period environment or a
/// state of a controlled transition. regret(x, a) is zero at greedy(x).
struct RegretView {
  std::span<const double> regrets;      // [point][action]
  std::span<const std::size_t> greedy;  // per point
  std::size_t num_actions = 0;

  std::size_t num_points() const { return greedy.size(); }
  double regret(std::size_t point, std::size_t action) const { return regrets[point * num_actions + action]; }
  /// Smallest regret among non-greedy actions at `point` (0 when |A| = 1).
  double gap(std::size_t point) const;
  /// Total regret of a response giving one action per decision point.
  double response_regret(std::span<const std::size_t> response) const;
};

/// Owning regret table for one (environment, candidate) pair.
struct RegretTable {
  std::vector<double> regrets;
  std::vector<std::size_t> greedy;
  std::size_t num_actions = 0;

  RegretView view() const { return {regrets, greedy, num_actions}; }
};

RegretTable regret_table(const RiskAversion& aversion, const OnePeriodEnv& env);
RegretTable regret_table(const RiskAversionInf& aversion, const ControlledTransition& trans,
                         const ValueFunction& vstar, double tol = kDefaultValueTol);

/// Regret tables for every (pool item, candidate) pair, stored flat.
class RegretBank {
 public:
  static RegretBank build(const OnePeriodPool& pool, std::span<const RiskAversion> cands);
  static RegretBank build(const ControlledPool& pool, std::span<const RiskAversionInf> cands,
                          const ValueCache& cache);

  std::size_t pool_size() const { return pool_size_; }
  std::size_t num_candidates() const { return num_candidates_; }
  std::size_t num_points() const { return num_points_; }
  std::size_t num_actions() const { return num_actions_; }

  RegretView view(std::size_t pool_index, std::size_t candidate) const;

 private:
  RegretBank(std::size_t pool_size, std::size_t num_candidates, std::size_t num_points, std::size_t num_actions);
  void store(std::size_t pool_index, std::size_t candidate, const RegretTable& table);

  std::size_t pool_size_ = 0;
  std::size_t num_candidates_ = 0;
  std::size_t num_points_ = 0;
  std::size_t num_actions_ = 0;
  std::vector<double> regrets_;
  std::vector<std::size_t> greedy_;
};

/// Immutable Gibbs confidence measure: probs proportional to exp(-k cumRegret).
class GibbsState {
 public:
  /// Uniform start with zero cumulative regret.
  GibbsState(std::size_t num_candidates, double k);
  GibbsState(std::vector<double> cum_regret, double k);

  /// New state with the round's regrets added. Negative regrets throw ContractError.
  GibbsState update(std::span<const double> round_regrets) const;

  std::span<const double> probs() const { return probs_; }
  std::span<const double> cum_regret() const { return cum_regret_; }
  double k() const { return k_; }
  std::size_t size() const { return probs_.size(); }
  /// argmax of probs, lowest index on ties.
  std::size_t map_estimate() const;

 private:
  void recompute();

  std::vector<double> cum_regret_;
  std::vector<double> probs_;
  double k_;
};

/// Distinguishing power -Phi(a*_j; i) Phi(a*_i; j), summed over decision points.
/// For two actions this equals -Phi(1;i)Phi(2;j) - Phi(2;i)Phi(1;j).
double psi(const RegretView& ti, const RegretView& tj);

/// Gap-weighted variant for more than two actions:
/// -gap_i Phi(a*_i; j) - gap_j Phi(a*_j; i), summed over decision points.
double psi_multi(const RegretView& ti, const RegretView& tj);

/// Design score: psi for two actions, psi_multi otherwise.
double design_psi(const RegretView& ti, const RegretView& tj);

double psi_one(const OnePeriodEnv& env, std::size_t i, std::size_t j, std::span<const RiskAversion> cands);
double psi_one_multi(const OnePeriodEnv& env, std::size_t i, std::size_t j, std::span<const RiskAversion> cands);
/// Throws ContractError if a cached value function is stale for `trans`.
double psi_inf(const ControlledTransition& trans, std::size_t i, std::size_t j,
               std::span<const RiskAversionInf> cands, std::span<const ValueFunction> vstars,
               double tol = kDefaultValueTol);

enum class Strategy { uniform, largest, expected };

Strategy parse_strategy(std::string_view name);
std::string_view to_string(Strategy s);

/// Pair weights of the expected design: eta ~ Q, zeta ~ Q given zeta != eta.
/// Row i is uniform over j != i when every other candidate has zero mass.
std::vector<double> expected_pair_weights(std::span<const double> probs);

/// Top two candidates by probability, lowest indices on ties.
std::pair<std::size_t, std::size_t> top_two(std::span<const double> probs);

/// Expected design score of one pool item, computed in factorized form.
double expected_psi(const RegretBank& bank, std::size_t pool_index, std::span<const double> probs);

/// Next pool index under `strategy`; argmins break ties to the lowest index.
std::size_t design_next(const RegretBank& bank, const GibbsState& gibbs, Strategy strategy, Rng& rng);

}  // namespace riskelicit
