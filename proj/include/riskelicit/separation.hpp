#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "riskelicit/agent.hpp"
#include "riskelicit/environments.hpp"
#include "riskelicit/risk.hpp"

namespace riskelicit {

/// Which construction produced a separating environment.
enum class SeparationTag { preferential_order, g_function, discount };

const char* to_string(SeparationTag tag);

/// (h1, h2) = (c * S(p), S(p)) with S(p) the integral of sigma over [1 - p, 1].
std::pair<double, double> h_curves(double c, const Spectrum& spectrum, double p);

/// inf{q : h2(q) >= h1(p)}, by bisection to 1e-10.
double g_function(double c, const Spectrum& spectrum, double p);

/// Smallest p in [0, 1] with integral of sigma over [1 - p, 1] >= target, by bisection.
double sigma_tail_inverse(const Spectrum& spectrum, double target, double tol = 1e-13);

struct OnePeriodSeparation {
  OnePeriodEnv env;
  SeparationTag tag;
  // States used by the construction. For the order-flip case only lo and hi are set.
  std::size_t x_lo = 0;
  std::size_t x_mid = 0;
  std::size_t x_hi = 0;
  // g-function case: action 1 puts p on x_mid, action 2 puts q on x_hi.
  double p = 0.0;
  double q = 0.0;
  double g1 = 0.0;
  double g2 = 0.0;
};

/// Environment on which best_action differs between av1 and av2.
///
/// Throws DomainError for identical candidates and SeparationError when no
/// separating p is found even on the fine grid.
OnePeriodSeparation separate_one_period(const RiskAversion& av1, const RiskAversion& av2);

struct DiscountSeparation {
  ControlledTransition trans;
  std::size_t x0 = 0;  // zero-cost state
  std::size_t x1 = 0;  // decision state
  std::size_t x2 = 0;  // unit-cost state
  double self_loop = 0.0;  // action 1 at x1 stays at x1 with this probability, else moves to x0
  double q = 0.0;          // action 2 at x1 moves to x2 with this probability, else to x0
  double threshold = 0.0;  // action 1 is greedy at x1 exactly for discounts below this
};

/// Transition on which the greedy policies for discounts r1 and r2 differ at x1.
DiscountSeparation separate_discount(const CostFunction& cost, const Spectrum& spectrum, double r1, double r2);

/// Transition on which the greedy policies of av1 and av2 differ.
///
/// Differing (C, mu) reuse the one-period separator lifted space-homogeneously;
/// otherwise the discount construction is used.
ControlledTransition separate_infinite(const RiskAversionInf& av1, const RiskAversionInf& av2);

/// Thrown when a numerical search fails to find a separating witness.
class SeparationError : public std::runtime_error {
 public:
  SeparationError(const std::string& message, double best_margin)
      : std::runtime_error(message), best_margin_(best_margin) {}
  double best_margin() const { return best_margin_; }

 private:
  double best_margin_;
};

/// min(Phi(a*_2; 1), Phi(a*_1; 2)): positive iff the best actions are disjoint.
double separation_margin(const RiskAversion& av1, const RiskAversion& av2, const OnePeriodEnv& env);

/// Minimum over states where the greedy policies differ of the smaller of the
/// two cross regrets; 0 when the policies agree everywhere.
double separation_margin(const RiskAversionInf& av1, const RiskAversionInf& av2, const ControlledTransition& trans,
                         double tol = kDefaultValueTol);

/// margins[i][j] for the constructed separator of (i, j); the diagonal is 0.
std::vector<std::vector<double>> margin_matrix(std::span<const RiskAversion> cands);
std::vector<std::vector<double>> margin_matrix(std::span<const RiskAversionInf> cands,
                                               double tol = kDefaultValueTol);

}  // namespace riskelicit
