#include "riskelicit/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "riskelicit/errors.hpp"

namespace riskelicit {

namespace {

template <class T>
void validate_distinct(std::span<const T> cands) {
  if (cands.empty()) throw DomainError("candidate set must be non-empty");
  for (std::size_t i = 0; i < cands.size(); ++i) {
    for (std::size_t j = i + 1; j < cands.size(); ++j) {
      if (cands[i] == cands[j]) {
        throw DomainError("candidates " + std::to_string(i) + " and " + std::to_string(j) + " are identical");
      }
    }
  }
}

RegretTable table_from_risks(std::span<const double> risks, std::size_t num_points, std::size_t num_actions,
                             double scale) {
  RegretTable t;
  t.num_actions = num_actions;
  t.regrets.resize(num_points * num_actions);
  t.greedy.resize(num_points);
  for (std::size_t x = 0; x < num_points; ++x) {
    const auto row = risks.subspan(x * num_actions, num_actions);
    const std::size_t g = argmin_lowest(row);
    t.greedy[x] = g;
    for (std::size_t a = 0; a < num_actions; ++a) t.regrets[x * num_actions + a] = scale * (row[a] - row[g]);
  }
  return t;
}

void check_pair(std::size_t i, std::size_t j, std::size_t n) {
  if (i >= n || j >= n) throw DomainError("candidate index out of range");
  if (i == j) throw DomainError("distinguishing power needs two different candidates");
}

}  // namespace

void validate_candidates(std::span<const RiskAversion> cands) { validate_distinct(cands); }
void validate_candidates(std::span<const RiskAversionInf> cands) { validate_distinct(cands); }

double regret_one(std::size_t action, const OnePeriodEnv& env, const RiskAversion& aversion) {
  if (action >= env.num_actions()) throw DomainError("action out of range");
  const auto risks = action_risks(aversion, env);
  return risks[action] - risks[argmin_lowest(risks)];
}

RegretTable regret_table(const RiskAversion& aversion, const OnePeriodEnv& env) {
  const auto risks = action_risks(aversion, env);
  return table_from_risks(risks, 1, env.num_actions(), 1.0);
}

RegretTable regret_table(const RiskAversionInf& aversion, const ControlledTransition& trans,
                         const ValueFunction& vstar, double tol) {
  if (vstar.values.size() != trans.num_states()) throw ContractError("value function has the wrong number of states");
  const std::size_t n = trans.num_states();
  const std::size_t na = trans.num_actions();
  std::vector<double> risks(n * na);
  for (std::size_t x = 0; x < n; ++x) {
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < na; ++a) {
      risks[x * na + a] = rho_outcomes(aversion.spectrum, vstar.values, trans.row(a, x));
      lo = std::min(lo, risks[x * na + a]);
    }
    const double residual = std::abs(aversion.cost[x] + aversion.discount * lo - vstar.values[x]);
    if (!(residual <= 10.0 * tol)) {
      throw ContractError("stale value function: fixed-point residual " + std::to_string(residual) + " at state " +
                          std::to_string(x));
    }
  }
  return table_from_risks(risks, n, na, aversion.discount);
}

double regret_state(std::size_t state, std::size_t action, const ControlledTransition& trans,
                    const RiskAversionInf& aversion, const ValueFunction& vstar, double tol) {
  if (state >= trans.num_states() || action >= trans.num_actions()) throw DomainError("state or action out of range");
  return regret_table(aversion, trans, vstar, tol).view().regret(state, action);
}

double regret_policy(const Policy& policy, const ControlledTransition& trans, const RiskAversionInf& aversion,
                     const ValueFunction& vstar, double tol) {
  if (policy.actions.size() != trans.num_states()) throw DomainError("policy and transition disagree on |X|");
  for (std::size_t a : policy.actions) {
    if (a >= trans.num_actions()) throw DomainError("policy action out of range");
  }
  return regret_table(aversion, trans, vstar, tol).view().response_regret(policy.actions);
}

double RegretView::gap(std::size_t point) const {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t g = greedy[point];
  for (std::size_t a = 0; a < num_actions; ++a) {
    if (a != g) best = std::min(best, regret(point, a));
  }
  return num_actions > 1 ? best : 0.0;
}

double RegretView::response_regret(std::span<const std::size_t> response) const {
  if (response.size() != num_points()) throw DomainError("response length does not match decision points");
  double total = 0.0;
  for (std::size_t x = 0; x < response.size(); ++x) {
    if (response[x] >= num_actions) throw DomainError("response action out of range");
    total += regret(x, response[x]);
  }
  return total;
}

// ---------------------------------------------------------------------------
// RegretBank

RegretBank::RegretBank(std::size_t pool_size, std::size_t num_candidates, std::size_t num_points,
                       std::size_t num_actions)
    : pool_size_(pool_size), num_candidates_(num_candidates), num_points_(num_points), num_actions_(num_actions) {
  regrets_.resize(pool_size * num_candidates * num_points * num_actions);
  greedy_.resize(pool_size * num_candidates * num_points);
}

void RegretBank::store(std::size_t pool_index, std::size_t candidate, const RegretTable& table) {
  const std::size_t slot = pool_index * num_candidates_ + candidate;
  std::copy(table.regrets.begin(), table.regrets.end(),
            regrets_.begin() + static_cast<std::ptrdiff_t>(slot * num_points_ * num_actions_));
  std::copy(table.greedy.begin(), table.greedy.end(),
            greedy_.begin() + static_cast<std::ptrdiff_t>(slot * num_points_));
}

RegretView RegretBank::view(std::size_t pool_index, std::size_t candidate) const {
  const std::size_t slot = pool_index * num_candidates_ + candidate;
  return {std::span<const double>(regrets_).subspan(slot * num_points_ * num_actions_, num_points_ * num_actions_),
          std::span<const std::size_t>(greedy_).subspan(slot * num_points_, num_points_), num_actions_};
}

RegretBank RegretBank::build(const OnePeriodPool& pool, std::span<const RiskAversion> cands) {
  if (pool.size() == 0) throw DomainError("pool must be non-empty");
  validate_candidates(cands);
  RegretBank bank(pool.size(), cands.size(), 1, pool[0].num_actions());
  for (std::size_t p = 0; p < pool.size(); ++p) {
    if (pool[p].num_actions() != bank.num_actions_) throw DomainError("pool environments differ in |A|");
    for (std::size_t c = 0; c < cands.size(); ++c) bank.store(p, c, regret_table(cands[c], pool[p]));
  }
  return bank;
}

RegretBank RegretBank::build(const ControlledPool& pool, std::span<const RiskAversionInf> cands,
                             const ValueCache& cache) {
  if (pool.size() == 0) throw DomainError("pool must be non-empty");
  validate_candidates(cands);
  if (cache.pool_size() != pool.size() || cache.num_candidates() != cands.size() ||
      cache.key().pool_seed != pool.seed || cache.key().candidate_hash != candidate_hash(cands)) {
    throw ContractError("value cache does not match this pool and candidate set");
  }
  RegretBank bank(pool.size(), cands.size(), pool[0].num_states(), pool[0].num_actions());
  for (std::size_t p = 0; p < pool.size(); ++p) {
    if (pool[p].num_actions() != bank.num_actions_ || pool[p].num_states() != bank.num_points_) {
      throw DomainError("pool transitions differ in shape");
    }
    for (std::size_t c = 0; c < cands.size(); ++c) {
      bank.store(p, c, regret_table(cands[c], pool[p], cache.at(p, c), cache.key().tol));
    }
  }
  return bank;
}

// ---------------------------------------------------------------------------
// GibbsState

GibbsState::GibbsState(std::size_t num_candidates, double k)
    : GibbsState(std::vector<double>(num_candidates, 0.0), k) {}

GibbsState::GibbsState(std::vector<double> cum_regret, double k) : cum_regret_(std::move(cum_regret)), k_(k) {
  if (cum_regret_.empty()) throw DomainError("Gibbs measure needs at least one candidate");
  if (!(k_ >= 0.0) || !std::isfinite(k_)) throw DomainError("learning rate must be finite and non-negative");
  for (double r : cum_regret_) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw ContractError("cumulative regrets must be finite and non-negative");
  }
  recompute();
}

void GibbsState::recompute() {
  const double lo = *std::min_element(cum_regret_.begin(), cum_regret_.end());
  probs_.resize(cum_regret_.size());
  double total = 0.0;
  for (std::size_t i = 0; i < cum_regret_.size(); ++i) {
    probs_[i] = std::exp(-k_ * (cum_regret_[i] - lo));
    total += probs_[i];
  }
  for (double& p : probs_) p /= total;
}

GibbsState GibbsState::update(std::span<const double> round_regrets) const {
  if (round_regrets.size() != cum_regret_.size()) throw DomainError("regret vector has the wrong length");
  std::vector<double> next(cum_regret_);
  for (std::size_t i = 0; i < next.size(); ++i) {
    if (!(round_regrets[i] >= 0.0)) throw ContractError("round regrets must be non-negative");
    next[i] += round_regrets[i];
  }
  return GibbsState(std::move(next), k_);
}

std::size_t GibbsState::map_estimate() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs_.size(); ++i) {
    if (probs_[i] > probs_[best]) best = i;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Distinguishing power

double psi(const RegretView& ti, const RegretView& tj) {
  double total = 0.0;
  for (std::size_t x = 0; x < ti.num_points(); ++x) {
    total += ti.regret(x, tj.greedy[x]) * tj.regret(x, ti.greedy[x]);
  }
  return -total;
}

double psi_multi(const RegretView& ti, const RegretView& tj) {
  double total = 0.0;
  for (std::size_t x = 0; x < ti.num_points(); ++x) {
    total += ti.gap(x) * tj.regret(x, ti.greedy[x]) + tj.gap(x) * ti.regret(x, tj.greedy[x]);
  }
  return -total;
}

double design_psi(const RegretView& ti, const RegretView& tj) {
  return ti.num_actions <= 2 ? psi(ti, tj) : psi_multi(ti, tj);
}

double psi_one(const OnePeriodEnv& env, std::size_t i, std::size_t j, std::span<const RiskAversion> cands) {
  check_pair(i, j, cands.size());
  const auto ti = regret_table(cands[i], env);
  const auto tj = regret_table(cands[j], env);
  if (env.num_actions() == 2) {
    // Two-action expansion; equal to psi() because greedy regrets are exactly zero.
    const auto vi = ti.view();
    const auto vj = tj.view();
    return -vi.regret(0, 0) * vj.regret(0, 1) - vi.regret(0, 1) * vj.regret(0, 0);
  }
  return psi(ti.view(), tj.view());
}

double psi_one_multi(const OnePeriodEnv& env, std::size_t i, std::size_t j, std::span<const RiskAversion> cands) {
  check_pair(i, j, cands.size());
  return psi_multi(regret_table(cands[i], env).view(), regret_table(cands[j], env).view());
}

double psi_inf(const ControlledTransition& trans, std::size_t i, std::size_t j,
               std::span<const RiskAversionInf> cands, std::span<const ValueFunction> vstars, double tol) {
  check_pair(i, j, cands.size());
  if (vstars.size() != cands.size()) throw ContractError("one value function per candidate is required");
  return psi(regret_table(cands[i], trans, vstars[i], tol).view(),
             regret_table(cands[j], trans, vstars[j], tol).view());
}

// ---------------------------------------------------------------------------
// Design

Strategy parse_strategy(std::string_view name) {
  if (name == "uniform") return Strategy::uniform;
  if (name == "largest") return Strategy::largest;
  if (name == "expected") return Strategy::expected;
  throw ConfigError("unknown strategy '" + std::string(name) + "' (expected uniform, largest or expected)");
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::uniform: return "uniform";
    case Strategy::largest: return "largest";
    case Strategy::expected: return "expected";
  }
  return "uniform";
}

std::vector<double> expected_pair_weights(std::span<const double> probs) {
  const std::size_t n = probs.size();
  std::vector<double> w(n * n, 0.0);
  if (n < 2) return w;
  for (std::size_t i = 0; i < n; ++i) {
    double rest = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) rest += probs[j];
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      w[i * n + j] = rest > 0.0 ? probs[i] * probs[j] / rest : probs[i] / static_cast<double>(n - 1);
    }
  }
  return w;
}

std::pair<std::size_t, std::size_t> top_two(std::span<const double> probs) {
  if (probs.size() < 2) throw DomainError("need at least two candidates");
  std::size_t first = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[first]) first = i;
  }
  std::size_t second = first == 0 ? 1 : 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (i != first && probs[i] > probs[second]) second = i;
  }
  return {first, second};
}

double expected_psi(const RegretBank& bank, std::size_t pool_index, std::span<const double> probs) {
  const std::size_t n = bank.num_candidates();
  if (probs.size() != n) throw DomainError("probability vector has the wrong length");
  if (n < 2) return 0.0;

  // Row weights p_i / D_i with D_i the mass of the other candidates.
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    double rest = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) rest += probs[j];
    }
    if (rest <= 0.0) {
      // All mass on i: zeta is uniform over the others.
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) acc += design_psi(bank.view(pool_index, i), bank.view(pool_index, j));
      }
      return probs[i] * acc / static_cast<double>(n - 1);
    }
    row[i] = probs[i] / rest;
  }

  // The i = j terms vanish because greedy regrets are exactly zero, so the
  // double sum over i != j factorizes by greedy action.
  const std::size_t na = bank.num_actions();
  const std::size_t np = bank.num_points();
  double result = 0.0;
  if (na <= 2) {
    // sum_{i,j} row_i p_j Phi_i(g_j) Phi_j(g_i) = sum_{a,b} U[a][b] W[b][a]
    // with U[a][b] = sum_{i: g_i = a} row_i Phi_i(b), W[b][a] = sum_{j: g_j = b} p_j Phi_j(a).
    std::vector<double> u(na * na), w(na * na);
    for (std::size_t x = 0; x < np; ++x) {
      std::fill(u.begin(), u.end(), 0.0);
      std::fill(w.begin(), w.end(), 0.0);
      for (std::size_t c = 0; c < n; ++c) {
        const auto v = bank.view(pool_index, c);
        const std::size_t g = v.greedy[x];
        for (std::size_t a = 0; a < na; ++a) {
          const double phi = v.regret(x, a);
          u[g * na + a] += row[c] * phi;
          w[g * na + a] += probs[c] * phi;
        }
      }
      for (std::size_t a = 0; a < na; ++a) {
        for (std::size_t b = 0; b < na; ++b) result += u[a * na + b] * w[b * na + a];
      }
    }
  } else {
    // sum_i row_i gap_i sum_j p_j Phi_j(g_i) + sum_j p_j gap_j sum_i row_i Phi_i(g_j).
    std::vector<double> m(na), q(na);
    for (std::size_t x = 0; x < np; ++x) {
      std::fill(m.begin(), m.end(), 0.0);
      std::fill(q.begin(), q.end(), 0.0);
      for (std::size_t c = 0; c < n; ++c) {
        const auto v = bank.view(pool_index, c);
        for (std::size_t a = 0; a < na; ++a) {
          m[a] += probs[c] * v.regret(x, a);
          q[a] += row[c] * v.regret(x, a);
        }
      }
      for (std::size_t c = 0; c < n; ++c) {
        const auto v = bank.view(pool_index, c);
        const std::size_t g = v.greedy[x];
        result += v.gap(x) * (row[c] * m[g] + probs[c] * q[g]);
      }
    }
  }
  return -result;
}

std::size_t design_next(const RegretBank& bank, const GibbsState& gibbs, Strategy strategy, Rng& rng) {
  const std::size_t pool = bank.pool_size();
  if (pool == 0) throw DomainError("pool must be non-empty");
  if (gibbs.size() != bank.num_candidates()) throw DomainError("Gibbs state and regret bank disagree on |candidates|");
  if (strategy != Strategy::uniform && bank.num_candidates() < 2) {
    throw DomainError("the largest and expected strategies need at least two candidates");
  }
  if (pool == 1) return 0;
  if (strategy == Strategy::uniform) return static_cast<std::size_t>(rng.index(pool));

  std::size_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  if (strategy == Strategy::largest) {
    const auto [i, j] = top_two(gibbs.probs());
    for (std::size_t p = 0; p < pool; ++p) {
      const double s = design_psi(bank.view(p, i), bank.view(p, j));
      if (s < best_score) {
        best_score = s;
        best = p;
      }
    }
    return best;
  }
  for (std::size_t p = 0; p < pool; ++p) {
    const double s = expected_psi(bank, p, gibbs.probs());
    if (s < best_score) {
      best_score = s;
      best = p;
    }
  }
  return best;
}

}  // namespace riskelicit
