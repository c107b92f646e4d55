#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskelicit/learner.hpp"
#include "riskelicit/serialization.hpp"

namespace riskelicit {

enum class Mode { one_period, infinite };

Mode parse_mode(std::string_view name);
std::string_view to_string(Mode m);

/// gamma E + (1 - gamma) AVaR_kappa, i.e. atoms (0, gamma) and (1 - kappa, 1 - gamma).
Spectrum family_spectrum(double kappa, double gamma);

/// Cartesian candidate grid. Order: costs (outer), kappa, gamma, discount (inner).
/// Each candidate's spectrum is family_spectrum(kappa, gamma).
struct GridSpec {
  std::vector<double> kappa;
  std::vector<double> gamma;
  std::vector<double> discount;  // infinite mode only
  std::vector<std::vector<double>> costs;

  std::size_t size(Mode mode) const;
};

/// Truth outside the grid (misspecification studies).
struct ExplicitTruth {
  std::vector<double> cost;
  double kappa = 0.0;
  double gamma = 0.0;
  double discount = 0.5;  // infinite mode only
};

struct ScenarioConfig {
  Mode mode = Mode::one_period;
  GridSpec grid;
  std::optional<std::size_t> truth_index;
  std::optional<ExplicitTruth> truth;
  std::size_t pool_size = 500;
  std::size_t num_actions = 2;
  std::size_t rounds = 100;
  std::size_t runs = 1;
  double k = 4.0;
  Strategy strategy = Strategy::uniform;
  std::uint64_t master_seed = 0;
  double value_tol = kDefaultValueTol;
  bool shared_pool = false;
  std::string value_cache_dir;  // empty: no sidecar

  std::size_t num_states() const;
};

/// Parses and validates; throws ConfigError with the offending field named.
ScenarioConfig config_from_json(const Json& j);
Json to_json(const ScenarioConfig& c);

CandidateSet one_period_candidates(const GridSpec& grid);
CandidateSetInf infinite_candidates(const GridSpec& grid);

struct TraceRow {
  std::size_t run = 0;
  std::size_t round = 0;  // 1-based
  std::size_t env_index = 0;
  std::vector<std::size_t> response;  // one action, or one action per state
  std::vector<double> regrets;
  std::vector<double> posterior;
  bool near_tie = false;
};

struct Trace {
  Mode mode = Mode::one_period;
  std::size_t runs = 0;
  std::size_t rounds = 0;
  std::size_t num_candidates = 0;
  std::optional<std::size_t> truth_index;
  std::size_t near_ties = 0;
  std::vector<TraceRow> rows;  // run-major, then round

  const TraceRow& at(std::size_t run, std::size_t round) const { return rows[run * rounds + (round - 1)]; }
};

/// Simulates every run of the scenario. Deterministic given the config.
Trace run_scenario(const ScenarioConfig& config);

/// CSV: run,round,env_index,response,regret_0..,post_0.. with %.17g numbers.
void write_trace_csv(const Trace& trace, std::ostream& out);
Trace read_trace_csv(std::istream& in);
/// Sidecar with the config and run statistics.
Json trace_sidecar(const Trace& trace, const ScenarioConfig& config);

struct SummaryRow {
  std::size_t round = 0;
  double mean = 0.0;
  std::vector<double> quantiles;
};

/// Quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);

/// Per round, mean and quantiles across runs of the posterior mass on `columns`.
std::vector<SummaryRow> summarize(const Trace& trace, std::span<const double> quantiles,
                                  std::span<const std::size_t> columns);

struct SweepPoint {
  double k = 0.0;
  double mean = 0.0;
  std::vector<double> per_run;
};

/// Posterior on the truth at the final round for each learning rate.
std::vector<SweepPoint> sweep_learning_rate(const ScenarioConfig& config, std::span<const double> k_values);

struct MisspecResult {
  double error = 0.0;
  std::size_t index = 0;
};

/// min over candidates of |rho_0(C_0(X)) - rho(C(X))| for X ~ state_probs.
MisspecResult misspec_error(std::span<const RiskAversion> cands, const RiskAversion& truth,
                            std::span<const double> state_probs);

}  // namespace riskelicit
