#include "riskelicit/risk.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "riskelicit/errors.hpp"

namespace riskelicit {

namespace {

void require_finite(std::span<const double> xs, const char* what) {
  for (double x : xs) {
    if (!std::isfinite(x)) throw DomainError(std::string(what) + " must be finite");
  }
}

double sum_of(std::span<const double> xs) { return std::accumulate(xs.begin(), xs.end(), 0.0); }

}  // namespace

// ---------------------------------------------------------------------------
// DiscreteDistribution

DiscreteDistribution::DiscreteDistribution(std::vector<double> values, std::vector<double> probs) {
  if (values.empty()) throw DomainError("distribution needs at least one support point");
  if (values.size() != probs.size()) throw DomainError("values and probs differ in length");
  require_finite(values, "values");
  require_finite(probs, "probs");
  for (double p : probs) {
    if (p < 0.0) throw DomainError("probabilities must be non-negative");
  }
  if (std::abs(sum_of(probs) - 1.0) > kProbTol) {
    throw DomainError("probabilities must sum to 1");
  }

  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  for (std::size_t idx : order) {
    if (probs[idx] == 0.0) continue;
    if (!values_.empty() && values[idx] - values_.back() < kValueTol) {
      probs_.back() += probs[idx];
    } else {
      values_.push_back(values[idx]);
      probs_.push_back(probs[idx]);
    }
  }
}

DiscreteDistribution DiscreteDistribution::point(double value) { return {{value}, {1.0}}; }

double DiscreteDistribution::mean() const {
  double m = 0.0;
  for (std::size_t k = 0; k < values_.size(); ++k) m += values_[k] * probs_[k];
  return m;
}

DiscreteDistribution DiscreteDistribution::shifted(double offset) const {
  std::vector<double> v(values_);
  for (double& x : v) x += offset;
  return {std::move(v), probs_};
}

DiscreteDistribution DiscreteDistribution::scaled(double factor) const {
  std::vector<double> v(values_);
  for (double& x : v) x *= factor;
  return {std::move(v), probs_};
}

// ---------------------------------------------------------------------------
// Spectrum

Spectrum::Spectrum(std::vector<Atom> atoms) {
  if (atoms.empty()) throw DomainError("spectrum needs at least one atom");
  double total = 0.0;
  for (const Atom& a : atoms) {
    if (!std::isfinite(a.alpha) || a.alpha < 0.0 || a.alpha >= 1.0) {
      throw DomainError("spectrum atoms need alpha in [0, 1)");
    }
    if (!std::isfinite(a.weight) || a.weight <= 0.0) {
      throw DomainError("spectrum atoms need positive weight");
    }
    total += a.weight;
  }
  if (std::abs(total - 1.0) > kProbTol) throw DomainError("spectrum weights must sum to 1");

  std::stable_sort(atoms.begin(), atoms.end(),
                   [](const Atom& a, const Atom& b) { return a.alpha < b.alpha; });
  for (const Atom& a : atoms) {
    if (!atoms_.empty() && atoms_.back().alpha == a.alpha) {
      atoms_.back().weight += a.weight;
    } else {
      atoms_.push_back(a);
    }
  }
}

Spectrum Spectrum::expectation() { return Spectrum({{0.0, 1.0}}); }

Spectrum Spectrum::avar_level(double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("AVaR level must lie in (0, 1]");
  return Spectrum({{1.0 - eta, 1.0}});
}

Spectrum Spectrum::mixture(double gamma, double alpha) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw DomainError("mixture weight gamma must lie in [0, 1]");
  std::vector<Atom> atoms;
  if (gamma > 0.0) atoms.push_back({0.0, gamma});
  if (gamma < 1.0) atoms.push_back({alpha, 1.0 - gamma});
  return Spectrum(std::move(atoms));
}

double Spectrum::density(double r) const {
  double s = 0.0;
  for (const Atom& a : atoms_) {
    if (a.alpha <= r) s += a.weight / (1.0 - a.alpha);
  }
  return s;
}

double Spectrum::cumulative(double r) const {
  double m = 0.0;
  for (const Atom& a : atoms_) {
    if (a.alpha <= r) m += a.weight;
  }
  return m;
}

// ---------------------------------------------------------------------------
// CostFunction

CostFunction::CostFunction(std::vector<double> costs) : costs_(std::move(costs)) {
  if (costs_.size() < 2) throw DomainError("cost function needs at least two states");
  require_finite(costs_, "costs");
  const auto [lo, hi] = std::minmax_element(costs_.begin(), costs_.end());
  if (std::abs(*lo) > kProbTol || std::abs(*hi - 1.0) > kProbTol) {
    throw DomainError("costs must be normalized to min 0 and max 1");
  }
  std::vector<double> sorted(costs_);
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] - sorted[i - 1] < kValueTol) throw DomainError("costs must be pairwise distinct");
  }
}

// ---------------------------------------------------------------------------
// Risk evaluation

double sigma_integral(const Spectrum& spectrum, double a, double b) {
  if (!(std::isfinite(a) && std::isfinite(b))) throw DomainError("integration bounds must be finite");
  if (a > b) throw DomainError("sigma_integral requires a <= b");
  if (a < -kProbTol || b > 1.0 + kProbTol) throw DomainError("integration bounds must lie in [0, 1]");
  a = std::max(a, 0.0);
  b = std::min(b, 1.0);
  double total = 0.0;
  for (const Spectrum::Atom& atom : spectrum.atoms()) {
    const double lo = std::max(a, atom.alpha);
    if (b > lo) total += atom.weight / (1.0 - atom.alpha) * (b - lo);
  }
  return total;
}

double avar(const DiscreteDistribution& dist, double eta) {
  if (!std::isfinite(eta) || eta <= 0.0 || eta > 1.0) throw DomainError("AVaR level must lie in (0, 1]");
  const auto values = dist.values();
  const auto probs = dist.probs();
  const double cut = 1.0 - eta;
  double lower = 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double upper = (k + 1 == values.size()) ? 1.0 : lower + probs[k];
    const double mass = upper - std::max(lower, cut);
    if (mass > 0.0) total += values[k] * mass;
    lower = upper;
  }
  return total / eta;
}

double rho(const Spectrum& spectrum, const DiscreteDistribution& dist) {
  const auto values = dist.values();
  const auto probs = dist.probs();
  double lower = 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double upper = (k + 1 == values.size()) ? 1.0 : std::min(1.0, lower + probs[k]);
    total += values[k] * sigma_integral(spectrum, lower, upper);
    lower = upper;
  }
  return total;
}

double rho_outcomes_sorted(const Spectrum& spectrum, std::span<const double> values,
                           std::span<const double> probs, std::span<const std::size_t> order) {
  const auto atoms = spectrum.atoms();
  double lower = 0.0;
  double total = 0.0;
  for (std::size_t n = 0; n < order.size(); ++n) {
    const std::size_t s = order[n];
    if (probs[s] == 0.0) continue;
    double upper = lower + probs[s];
    if (upper > 1.0) upper = 1.0;
    double integral = 0.0;
    for (const Spectrum::Atom& atom : atoms) {
      const double lo = lower > atom.alpha ? lower : atom.alpha;
      if (upper > lo) integral += atom.weight / (1.0 - atom.alpha) * (upper - lo);
    }
    total += values[s] * integral;
    lower = upper;
  }
  // Mass lost to rounding belongs to the top of the support.
  if (lower < 1.0 && !order.empty()) {
    std::size_t top = order.size();
    while (top > 0 && probs[order[top - 1]] == 0.0) --top;
    if (top > 0) total += values[order[top - 1]] * sigma_integral(spectrum, lower, 1.0);
  }
  return total;
}

double rho_outcomes(const Spectrum& spectrum, std::span<const double> values,
                    std::span<const double> probs) {
  constexpr std::size_t kSmall = 32;
  std::array<std::size_t, kSmall> small{};
  std::vector<std::size_t> large;
  std::span<std::size_t> order;
  if (values.size() <= kSmall) {
    order = std::span<std::size_t>(small.data(), values.size());
  } else {
    large.resize(values.size());
    order = large;
  }
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Insertion sort: supports are tiny in every use here.
  for (std::size_t i = 1; i < order.size(); ++i) {
    const std::size_t key = order[i];
    std::size_t j = i;
    while (j > 0 && values[order[j - 1]] > values[key]) {
      order[j] = order[j - 1];
      --j;
    }
    order[j] = key;
  }
  return rho_outcomes_sorted(spectrum, values, probs, order);
}

namespace {

// min over a grid of r of r + E[(Z - r)_+] / eta, swept in one pass.
double avar_by_grid(const DiscreteDistribution& dist, double eta, std::size_t grid) {
  const auto values = dist.values();
  const auto probs = dist.probs();
  const double lo = dist.min();
  const double hi = dist.max();
  // Running tail sums over support points strictly above r.
  double tail_mass = 0.0;
  double tail_first_moment = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    tail_mass += probs[k];
    tail_first_moment += probs[k] * values[k];
  }
  std::size_t next = 0;  // first support index with value > r
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < grid; ++g) {
    const double r = (grid == 1) ? lo : lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(grid - 1);
    while (next < values.size() && values[next] <= r) {
      tail_mass -= probs[next];
      tail_first_moment -= probs[next] * values[next];
      ++next;
    }
    const double excess = std::max(0.0, tail_first_moment - r * tail_mass);
    best = std::min(best, r + excess / eta);
  }
  return best;
}

}  // namespace

double rho_oracle(const Spectrum& spectrum, const DiscreteDistribution& dist, std::size_t grid) {
  if (grid < 1000) throw DomainError("oracle grid needs at least 1000 points");
  double total = 0.0;
  for (const Spectrum::Atom& atom : spectrum.atoms()) {
    total += atom.weight * avar_by_grid(dist, 1.0 - atom.alpha, grid);
  }
  return total;
}

}  // namespace riskelicit
