#include "riskelicit/separation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "riskelicit/errors.hpp"
#include "riskelicit/learner.hpp"

namespace riskelicit {

namespace {

constexpr std::size_t kCoarseGrid = 1000;
constexpr std::size_t kFineGrid = 100000;
// Below this |g1 - g2| the midpoint q leaves too little room to trust the sign.
constexpr double kMinGap = 1e-8;

double tail(const Spectrum& spectrum, double p) { return sigma_integral(spectrum, 1.0 - p, 1.0); }

struct Scan {
  double p = 0.0;
  double gap = -1.0;
};

Scan scan_grid(const std::function<double(double)>& gap, std::size_t n) {
  Scan best;
  for (std::size_t k = 1; k <= n; ++k) {
    const double p = static_cast<double>(k) / static_cast<double>(n);
    const double g = gap(p);
    if (g > best.gap) best = {p, g};
  }
  // Local refinement on the neighbouring cells.
  double lo = std::max(0.0, best.p - 1.0 / static_cast<double>(n));
  double hi = std::min(1.0, best.p + 1.0 / static_cast<double>(n));
  constexpr double kInvPhi = 0.6180339887498949;
  for (int it = 0; it < 60; ++it) {
    const double a = hi - kInvPhi * (hi - lo);
    const double b = lo + kInvPhi * (hi - lo);
    if (gap(a) >= gap(b)) {
      hi = b;
    } else {
      lo = a;
    }
  }
  const double mid = 0.5 * (lo + hi);
  const double g = gap(mid);
  if (g > best.gap) best = {mid, g};
  return best;
}

bool same_order(const CostFunction& a, const CostFunction& b, std::size_t& x, std::size_t& y) {
  for (x = 0; x < a.size(); ++x) {
    for (y = x + 1; y < a.size(); ++y) {
      if ((a[x] < a[y]) != (b[x] < b[y])) return false;
    }
  }
  return true;
}

std::size_t argmin_cost(const CostFunction& c) {
  return static_cast<std::size_t>(std::min_element(c.costs().begin(), c.costs().end()) - c.costs().begin());
}
std::size_t argmax_cost(const CostFunction& c) {
  return static_cast<std::size_t>(std::max_element(c.costs().begin(), c.costs().end()) - c.costs().begin());
}

}  // namespace

const char* to_string(SeparationTag tag) {
  switch (tag) {
    case SeparationTag::preferential_order: return "preferential-order";
    case SeparationTag::g_function: return "g-function";
    case SeparationTag::discount: return "discount";
  }
  return "unknown";
}

std::pair<double, double> h_curves(double c, const Spectrum& spectrum, double p) {
  const double s = tail(spectrum, p);
  return {c * s, s};
}

double sigma_tail_inverse(const Spectrum& spectrum, double target, double tol) {
  if (target <= 0.0) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (tail(spectrum, mid) >= target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double g_function(double c, const Spectrum& spectrum, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("g_function needs p in [0, 1]");
  return sigma_tail_inverse(spectrum, h_curves(c, spectrum, p).first, 1e-10);
}

OnePeriodSeparation separate_one_period(const RiskAversion& av1, const RiskAversion& av2) {
  if (av1 == av2) throw DomainError("cannot separate identical risk aversions");
  const std::size_t n = av1.cost.size();
  if (av2.cost.size() != n) throw DomainError("candidates disagree on |X|");

  std::size_t fx = 0;
  std::size_t fy = 0;
  if (!same_order(av1.cost, av2.cost, fx, fy)) {
    std::vector<std::vector<double>> cols(2, std::vector<double>(n, 0.0));
    cols[0][fx] = 1.0;
    cols[1][fy] = 1.0;
    OnePeriodSeparation out{OnePeriodEnv(std::move(cols)), SeparationTag::preferential_order};
    out.x_lo = fx;
    out.x_hi = fy;
    return out;
  }

  const std::size_t lo = argmin_cost(av1.cost);
  const std::size_t hi = argmax_cost(av1.cost);
  if (n < 3) throw DomainError("two-state problems cannot distinguish spectra");
  std::size_t mid = n;
  for (std::size_t x = 0; x < n; ++x) {
    if (x == lo || x == hi) continue;
    if (mid == n) mid = x;
    if (std::abs(av1.cost[x] - av2.cost[x]) > kValueTol) {
      mid = x;
      break;
    }
  }
  const double c1 = av1.cost[mid];
  const double c2 = av2.cost[mid];
  auto gap = [&](double p) { return std::abs(g_function(c1, av1.spectrum, p) - g_function(c2, av2.spectrum, p)); };

  Scan best = scan_grid(gap, kCoarseGrid);
  if (best.gap < kMinGap) best = scan_grid(gap, kFineGrid);
  if (best.gap < kMinGap) {
    throw SeparationError("no separating p found; largest |g1 - g2| is " + std::to_string(best.gap), best.gap);
  }

  const double g1 = g_function(c1, av1.spectrum, best.p);
  const double g2 = g_function(c2, av2.spectrum, best.p);
  const double q = 0.5 * (g1 + g2);
  std::vector<std::vector<double>> cols(2, std::vector<double>(n, 0.0));
  cols[0][lo] = 1.0 - best.p;
  cols[0][mid] += best.p;
  cols[1][lo] = 1.0 - q;
  cols[1][hi] += q;
  OnePeriodSeparation out{OnePeriodEnv(std::move(cols)), SeparationTag::g_function, lo, mid, hi, best.p, q, g1, g2};
  if (best_action(av1, out.env) == best_action(av2, out.env)) {
    throw SeparationError("constructed environment does not separate the candidates", best.gap);
  }
  return out;
}

DiscountSeparation separate_discount(const CostFunction& cost, const Spectrum& spectrum, double r1, double r2) {
  if (r1 == r2) throw DomainError("discounts must differ");
  for (double r : {r1, r2}) {
    if (!(r > 0.0 && r < 1.0)) throw DomainError("discounts must lie strictly inside (0, 1)");
  }
  const std::size_t n = cost.size();
  if (n < 3) throw DomainError("discount separation needs at least three states");
  const std::size_t x0 = argmin_cost(cost);
  const std::size_t x2 = argmax_cost(cost);
  std::size_t x1 = 0;
  while (x1 == x0 || x1 == x2) ++x1;
  const double c = cost[x1];

  // With S(s) the sigma tail over the self-loop mass and S(q) over the mass
  // sent to x2, action 1 is greedy at x1 iff r < 1/S(s) - c/S(q).
  const double t = 0.5 * (r1 + r2);
  double s = 1.0;
  double q = 1.0;
  if (t >= 1.0 - c) {
    s = sigma_tail_inverse(spectrum, 1.0 / (t + c));
  } else {
    q = sigma_tail_inverse(spectrum, c / (1.0 - t));
  }
  const double threshold = 1.0 / tail(spectrum, s) - c / tail(spectrum, q);

  std::vector<std::vector<std::vector<double>>> m(2, std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0)));
  for (std::size_t x = 0; x < n; ++x) {
    m[0][x][x0] = 1.0;
    m[1][x][x == x0 || x == x2 ? x2 : x0] = 1.0;
  }
  m[0][x1][x0] = 1.0 - s;
  m[0][x1][x1] += s;
  m[1][x1][x0] = 1.0 - q;
  m[1][x1][x2] += q;
  return {ControlledTransition(std::move(m)), x0, x1, x2, s, q, threshold};
}

ControlledTransition separate_infinite(const RiskAversionInf& av1, const RiskAversionInf& av2) {
  if (av1 == av2) throw DomainError("cannot separate identical risk aversions");
  if (av1.cost != av2.cost || av1.spectrum != av2.spectrum) {
    return ControlledTransition::space_homogeneous(separate_one_period(av1.one_period(), av2.one_period()).env);
  }
  return separate_discount(av1.cost, av1.spectrum, av1.discount, av2.discount).trans;
}

double separation_margin(const RiskAversion& av1, const RiskAversion& av2, const OnePeriodEnv& env) {
  const auto t1 = regret_table(av1, env);
  const auto t2 = regret_table(av2, env);
  return std::min(t1.regrets[t2.greedy[0]], t2.regrets[t1.greedy[0]]);
}

double separation_margin(const RiskAversionInf& av1, const RiskAversionInf& av2, const ControlledTransition& trans,
                         double tol) {
  const auto t1 = regret_table(av1, trans, value_iteration(av1, trans, tol), tol);
  const auto t2 = regret_table(av2, trans, value_iteration(av2, trans, tol), tol);
  const auto v1 = t1.view();
  const auto v2 = t2.view();
  double margin = std::numeric_limits<double>::infinity();
  bool differs = false;
  for (std::size_t x = 0; x < v1.num_points(); ++x) {
    if (v1.greedy[x] == v2.greedy[x]) continue;
    differs = true;
    margin = std::min(margin, std::min(v1.regret(x, v2.greedy[x]), v2.regret(x, v1.greedy[x])));
  }
  return differs ? margin : 0.0;
}

std::vector<std::vector<double>> margin_matrix(std::span<const RiskAversion> cands) {
  std::vector<std::vector<double>> out(cands.size(), std::vector<double>(cands.size(), 0.0));
  for (std::size_t i = 0; i < cands.size(); ++i) {
    for (std::size_t j = 0; j < cands.size(); ++j) {
      if (i != j) out[i][j] = separation_margin(cands[i], cands[j], separate_one_period(cands[i], cands[j]).env);
    }
  }
  return out;
}

std::vector<std::vector<double>> margin_matrix(std::span<const RiskAversionInf> cands, double tol) {
  std::vector<std::vector<double>> out(cands.size(), std::vector<double>(cands.size(), 0.0));
  for (std::size_t i = 0; i < cands.size(); ++i) {
    for (std::size_t j = 0; j < cands.size(); ++j) {
      if (i != j) out[i][j] = separation_margin(cands[i], cands[j], separate_infinite(cands[i], cands[j]), tol);
    }
  }
  return out;
}

}  // namespace riskelicit
