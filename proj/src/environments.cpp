#include "riskelicit/environments.hpp"

#include <cmath>
#include <numeric>

#include "riskelicit/errors.hpp"
#include "riskelicit/risk.hpp"

namespace riskelicit {

bool is_simplex_point(std::span<const double> probs) {
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) return false;
    total += p;
  }
  return std::abs(total - 1.0) <= kProbTol;
}

OnePeriodEnv::OnePeriodEnv(std::vector<std::vector<double>> columns) {
  if (columns.empty()) throw DomainError("environment needs at least one action");
  num_actions_ = columns.size();
  num_states_ = columns.front().size();
  if (num_states_ == 0) throw DomainError("environment needs at least one state");
  probs_.reserve(num_actions_ * num_states_);
  for (const auto& col : columns) {
    if (col.size() != num_states_) throw DomainError("environment columns differ in length");
    if (!is_simplex_point(col)) throw DomainError("environment column is not a probability vector");
    probs_.insert(probs_.end(), col.begin(), col.end());
  }
}

ControlledTransition::ControlledTransition(std::vector<std::vector<std::vector<double>>> matrices) {
  if (matrices.empty()) throw DomainError("transition needs at least one action");
  num_actions_ = matrices.size();
  num_states_ = matrices.front().size();
  if (num_states_ == 0) throw DomainError("transition needs at least one state");
  probs_.reserve(num_actions_ * num_states_ * num_states_);
  for (const auto& matrix : matrices) {
    if (matrix.size() != num_states_) throw DomainError("transition matrices must be square");
    for (const auto& row : matrix) {
      if (row.size() != num_states_) throw DomainError("transition matrices must be square");
      if (!is_simplex_point(row)) throw DomainError("transition row is not a probability vector");
      probs_.insert(probs_.end(), row.begin(), row.end());
    }
  }
}

ControlledTransition ControlledTransition::space_homogeneous(const OnePeriodEnv& env) {
  std::vector<std::vector<std::vector<double>>> matrices(env.num_actions());
  for (std::size_t a = 0; a < env.num_actions(); ++a) {
    const auto col = env.column(a);
    matrices[a].assign(env.num_states(), std::vector<double>(col.begin(), col.end()));
  }
  return ControlledTransition(std::move(matrices));
}

std::vector<double> sample_simplex(Rng& rng, std::size_t dim) {
  if (dim == 0) throw DomainError("simplex dimension must be positive");
  std::vector<double> out(dim);
  double total = 0.0;
  for (double& x : out) {
    x = rng.exponential();
    total += x;
  }
  // All-zero draws have probability 2^-53 per coordinate; retry rather than divide by zero.
  while (total == 0.0) {
    total = 0.0;
    for (double& x : out) {
      x = rng.exponential();
      total += x;
    }
  }
  for (double& x : out) x /= total;
  return out;
}

OnePeriodEnv sample_one_period(Rng& rng, std::size_t num_states, std::size_t num_actions) {
  std::vector<std::vector<double>> cols(num_actions);
  for (auto& col : cols) col = sample_simplex(rng, num_states);
  return OnePeriodEnv(std::move(cols));
}

ControlledTransition sample_controlled(Rng& rng, std::size_t num_states, std::size_t num_actions) {
  std::vector<std::vector<std::vector<double>>> matrices(num_actions);
  for (auto& matrix : matrices) {
    matrix.resize(num_states);
    for (auto& row : matrix) row = sample_simplex(rng, num_states);
  }
  return ControlledTransition(std::move(matrices));
}

OnePeriodPool build_one_period_pool(std::uint64_t seed, std::size_t size, std::size_t num_states,
                                    std::size_t num_actions) {
  if (size == 0) throw DomainError("pool size must be positive");
  Rng rng(seed);
  OnePeriodPool pool;
  pool.seed = seed;
  pool.items.reserve(size);
  for (std::size_t i = 0; i < size; ++i) pool.items.push_back(sample_one_period(rng, num_states, num_actions));
  return pool;
}

ControlledPool build_controlled_pool(std::uint64_t seed, std::size_t size, std::size_t num_states,
                                     std::size_t num_actions) {
  if (size == 0) throw DomainError("pool size must be positive");
  Rng rng(seed);
  ControlledPool pool;
  pool.seed = seed;
  pool.items.reserve(size);
  for (std::size_t i = 0; i < size; ++i) pool.items.push_back(sample_controlled(rng, num_states, num_actions));
  return pool;
}

}  // namespace riskelicit
