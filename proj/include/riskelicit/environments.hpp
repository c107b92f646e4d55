#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "riskelicit/rng.hpp"

namespace riskelicit {

/// One-period environment: per action a, a probability vector over states.
class OnePeriodEnv {
 public:
  /// columns[a][x] = P^a(x). Every column must be a simplex point.
  explicit OnePeriodEnv(std::vector<std::vector<double>> columns);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }

  std::span<const double> column(std::size_t action) const {
    return {probs_.data() + action * num_states_, num_states_};
  }
  double prob(std::size_t action, std::size_t state) const {
    return probs_[action * num_states_ + state];
  }

  bool operator==(const OnePeriodEnv&) const = default;

 private:
  std::size_t num_states_ = 0;
  std::size_t num_actions_ = 0;
  std::vector<double> probs_;  // action-major
};

/// Controlled transition: per action a, a row-stochastic |X| x |X| matrix.
class ControlledTransition {
 public:
  /// matrices[a][x][y] = T^a(x, y). Every row must be a simplex point.
  explicit ControlledTransition(std::vector<std::vector<std::vector<double>>> matrices);

  /// Space-homogeneous lift: every row of T^a equals column a of `env`.
  static ControlledTransition space_homogeneous(const OnePeriodEnv& env);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }

  std::span<const double> row(std::size_t action, std::size_t state) const {
    return {probs_.data() + (action * num_states_ + state) * num_states_, num_states_};
  }

  bool operator==(const ControlledTransition&) const = default;

 private:
  std::size_t num_states_ = 0;
  std::size_t num_actions_ = 0;
  std::vector<double> probs_;  // [action][state][next]
};

/// Fixed, indexed set of environments drawn from one seed.
template <class Env>
struct EnvPool {
  std::vector<Env> items;
  std::uint64_t seed = 0;

  std::size_t size() const { return items.size(); }
  const Env& operator[](std::size_t i) const { return items[i]; }
};

using OnePeriodPool = EnvPool<OnePeriodEnv>;
using ControlledPool = EnvPool<ControlledTransition>;

/// Flat Dirichlet(1, ..., 1) draw: normalized unit exponentials.
std::vector<double> sample_simplex(Rng& rng, std::size_t dim);

OnePeriodEnv sample_one_period(Rng& rng, std::size_t num_states, std::size_t num_actions);
ControlledTransition sample_controlled(Rng& rng, std::size_t num_states, std::size_t num_actions);

/// IID pool of `size` environments. (seed, size, dims) determine the pool.
OnePeriodPool build_one_period_pool(std::uint64_t seed, std::size_t size, std::size_t num_states,
                                    std::size_t num_actions);
ControlledPool build_controlled_pool(std::uint64_t seed, std::size_t size, std::size_t num_states,
                                     std::size_t num_actions);

/// True when every entry is non-negative and the entries sum to 1 within kProbTol.
bool is_simplex_point(std::span<const double> probs);

}  // namespace riskelicit
