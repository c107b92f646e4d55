#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace riskelicit {

/// Tolerance on probability sums and weight sums.
inline constexpr double kProbTol = 1e-12;
/// Tolerance for treating two outcome values (or costs) as equal.
inline constexpr double kValueTol = 1e-9;

/// Finite distribution of a real random variable.
///
/// Construction validates and canonicalizes: support points are sorted,
/// points closer than kValueTol are merged and zero-probability points are
/// dropped, so values() is strictly increasing.
class DiscreteDistribution {
 public:
  DiscreteDistribution(std::vector<double> values, std::vector<double> probs);

  static DiscreteDistribution point(double value);

  std::span<const double> values() const { return values_; }
  std::span<const double> probs() const { return probs_; }
  std::size_t size() const { return values_.size(); }

  double mean() const;
  double min() const { return values_.front(); }
  double max() const { return values_.back(); }

  DiscreteDistribution shifted(double offset) const;
  DiscreteDistribution scaled(double factor) const;

 private:
  std::vector<double> values_;
  std::vector<double> probs_;
};

/// Atomic measure mu on [0, 1) mixing AVaR levels: rho_mu = sum_i w_i AVaR_{1 - alpha_i}.
class Spectrum {
 public:
  struct Atom {
    double alpha;
    double weight;
    bool operator==(const Atom&) const = default;
  };

  /// Atoms need alpha in [0, 1), weight > 0 and weights summing to 1.
  /// Duplicate alphas are merged; atoms are stored by increasing alpha.
  explicit Spectrum(std::vector<Atom> atoms);

  /// mu = delta_0, i.e. the expectation.
  static Spectrum expectation();
  /// mu = delta_{1 - eta}, i.e. AVaR_eta.
  static Spectrum avar_level(double eta);
  /// mu = gamma delta_0 + (1 - gamma) delta_alpha. Zero-weight atoms are omitted.
  static Spectrum mixture(double gamma, double alpha);

  std::span<const Atom> atoms() const { return atoms_; }

  /// sigma_mu(r) = sum over atoms with alpha <= r of weight / (1 - alpha).
  double density(double r) const;
  /// mu([0, r]).
  double cumulative(double r) const;

  bool operator==(const Spectrum&) const = default;

 private:
  std::vector<Atom> atoms_;
};

/// Per-state cost. Values must be pairwise distinct with min 0 and max 1.
class CostFunction {
 public:
  explicit CostFunction(std::vector<double> costs);

  std::span<const double> costs() const { return costs_; }
  std::size_t size() const { return costs_.size(); }
  double operator[](std::size_t state) const { return costs_[state]; }

  bool operator==(const CostFunction&) const = default;

 private:
  std::vector<double> costs_;
};

/// AVaR_eta(Z) = (1/eta) * integral of the quantile function over [1 - eta, 1].
double avar(const DiscreteDistribution& dist, double eta);

/// Integral of sigma_mu over [a, b]; closed form for atomic mu.
double sigma_integral(const Spectrum& spectrum, double a, double b);

/// rho_mu(Z) = sum_k z_k * integral of sigma_mu over the k-th cumulative bracket.
double rho(const Spectrum& spectrum, const DiscreteDistribution& dist);

/// rho_mu through the infimum representation of AVaR, minimized on a grid of
/// `grid` points spanning the support. Independent of rho()'s quantile route.
double rho_oracle(const Spectrum& spectrum, const DiscreteDistribution& dist, std::size_t grid);

/// rho_mu of the outcome `values[s]` drawn with probability `probs[s]`.
///
/// Hot-path variant used by the agent and learner: inputs need not be sorted
/// and are not validated. probs must be non-negative and sum to one.
double rho_outcomes(const Spectrum& spectrum, std::span<const double> values,
                    std::span<const double> probs);

/// As rho_outcomes, with `order` a permutation sorting `values` ascending.
double rho_outcomes_sorted(const Spectrum& spectrum, std::span<const double> values,
                           std::span<const double> probs, std::span<const std::size_t> order);

}  // namespace riskelicit
