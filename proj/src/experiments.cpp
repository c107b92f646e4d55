#include "riskelicit/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "riskelicit/errors.hpp"

namespace riskelicit {

namespace {

const std::set<std::string> kConfigKeys = {"mode",   "grid",      "truth",    "poolSize",   "numActions",
                                           "rounds", "runs",      "k",        "strategy",   "masterSeed",
                                           "valueTol", "sharedPool", "valueCacheDir"};

template <class T>
T field(const Json& j, const char* name) {
  try {
    return j.at(name).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config field '") + name + "': " + e.what());
  }
}

template <class T>
T field_or(const Json& j, const char* name, T fallback) {
  return j.contains(name) ? field<T>(j, name) : fallback;
}

// Candidates with their Gibbs-independent per-pool data for one run.
struct Truth {
  std::vector<std::vector<std::size_t>> response;  // per pool item
  std::vector<bool> near_tie;
};

bool any_near_tie(const RegretView& v) {
  for (std::size_t x = 0; x < v.num_points(); ++x) {
    if (v.num_actions > 1 && v.gap(x) < kNearTieGap) return true;
  }
  return false;
}

void record_truth(Truth& truth, const RegretView& v) {
  truth.response.emplace_back(v.greedy.begin(), v.greedy.end());
  truth.near_tie.push_back(any_near_tie(v));
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t pool_seed(const ScenarioConfig& config, const Rng& run_rng) {
  if (config.shared_pool) return Rng(config.master_seed).split(~std::uint64_t{0}).next_u64();
  return run_rng.split(0).next_u64();
}

void simulate_rounds(const ScenarioConfig& config, std::size_t run, const RegretBank& bank, const Truth& truth,
                     Rng& design_rng, Trace& trace) {
  const std::size_t n = bank.num_candidates();
  GibbsState gibbs(n, config.k);
  std::vector<double> regrets(n);
  for (std::size_t round = 1; round <= config.rounds; ++round) {
    const std::size_t p = design_next(bank, gibbs, config.strategy, design_rng);
    const auto& response = truth.response[p];
    for (std::size_t c = 0; c < n; ++c) regrets[c] = bank.view(p, c).response_regret(response);
    gibbs = gibbs.update(regrets);
    TraceRow row;
    row.run = run;
    row.round = round;
    row.env_index = p;
    row.response = response;
    row.regrets = regrets;
    row.posterior.assign(gibbs.probs().begin(), gibbs.probs().end());
    row.near_tie = truth.near_tie[p];
    if (row.near_tie) ++trace.near_ties;
    trace.rows.push_back(std::move(row));
  }
}

void run_one_period(const ScenarioConfig& config, std::size_t run, const Rng& run_rng, Trace& trace) {
  const auto cands = one_period_candidates(config.grid);
  const auto pool = build_one_period_pool(pool_seed(config, run_rng), config.pool_size, config.num_states(),
                                          config.num_actions);
  const auto bank = RegretBank::build(pool, cands);
  Truth truth;
  if (config.truth_index) {
    for (std::size_t p = 0; p < pool.size(); ++p) record_truth(truth, bank.view(p, *config.truth_index));
  } else {
    const RiskAversion agent{CostFunction(config.truth->cost), family_spectrum(config.truth->kappa, config.truth->gamma)};
    for (std::size_t p = 0; p < pool.size(); ++p) record_truth(truth, regret_table(agent, pool[p]).view());
  }
  Rng design_rng = run_rng.split(1);
  simulate_rounds(config, run, bank, truth, design_rng, trace);
}

void run_infinite(const ScenarioConfig& config, std::size_t run, const Rng& run_rng, Trace& trace) {
  const auto cands = infinite_candidates(config.grid);
  const auto pool =
      build_controlled_pool(pool_seed(config, run_rng), config.pool_size, config.num_states(), config.num_actions);
  const ValueCache::Key key{pool.seed, pool.size(), candidate_hash(std::span<const RiskAversionInf>(cands)),
                            config.value_tol};
  std::optional<ValueCache> cache;
  if (!config.value_cache_dir.empty()) cache = load_value_cache(config.value_cache_dir, key);
  if (!cache) {
    cache = ValueCache::build(pool, cands, config.value_tol);
    if (!config.value_cache_dir.empty()) save_value_cache(config.value_cache_dir, *cache);
  }
  const auto bank = RegretBank::build(pool, cands, *cache);
  Truth truth;
  if (config.truth_index) {
    for (std::size_t p = 0; p < pool.size(); ++p) record_truth(truth, bank.view(p, *config.truth_index));
  } else {
    const RiskAversionInf agent(CostFunction(config.truth->cost),
                                family_spectrum(config.truth->kappa, config.truth->gamma), config.truth->discount);
    for (std::size_t p = 0; p < pool.size(); ++p) {
      const auto v = value_iteration(agent, pool[p], config.value_tol);
      record_truth(truth, regret_table(agent, pool[p], v, config.value_tol).view());
    }
  }
  Rng design_rng = run_rng.split(1);
  simulate_rounds(config, run, bank, truth, design_rng, trace);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw ConfigError("not a number in trace: '" + s + "'");
  return v;
}

std::size_t parse_index(const std::string& s) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError("not an index in trace: '" + s + "'");
  return v;
}

}  // namespace

Mode parse_mode(std::string_view name) {
  if (name == "one-period") return Mode::one_period;
  if (name == "infinite") return Mode::infinite;
  throw ConfigError("unknown mode '" + std::string(name) + "' (expected one-period or infinite)");
}

std::string_view to_string(Mode m) { return m == Mode::one_period ? "one-period" : "infinite"; }

Spectrum family_spectrum(double kappa, double gamma) {
  if (!(kappa > 0.0 && kappa <= 1.0)) throw DomainError("kappa must lie in (0, 1]");
  return Spectrum::mixture(gamma, 1.0 - kappa);
}

std::size_t GridSpec::size(Mode mode) const {
  const std::size_t base = costs.size() * kappa.size() * gamma.size();
  return mode == Mode::infinite ? base * discount.size() : base;
}

std::size_t ScenarioConfig::num_states() const { return grid.costs.empty() ? 0 : grid.costs.front().size(); }

CandidateSet one_period_candidates(const GridSpec& grid) {
  CandidateSet out;
  for (const auto& c : grid.costs) {
    for (double kappa : grid.kappa) {
      for (double gamma : grid.gamma) out.push_back({CostFunction(c), family_spectrum(kappa, gamma)});
    }
  }
  return out;
}

CandidateSetInf infinite_candidates(const GridSpec& grid) {
  CandidateSetInf out;
  for (const auto& c : grid.costs) {
    for (double kappa : grid.kappa) {
      for (double gamma : grid.gamma) {
        for (double r : grid.discount) out.emplace_back(CostFunction(c), family_spectrum(kappa, gamma), r);
      }
    }
  }
  return out;
}

ScenarioConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("scenario config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kConfigKeys.count(key)) throw ConfigError("unknown config field '" + key + "'");
  }
  ScenarioConfig c;
  c.mode = parse_mode(field<std::string>(j, "mode"));
  const Json& g = j.at("grid");
  c.grid.kappa = field<std::vector<double>>(g, "kappa");
  c.grid.gamma = field<std::vector<double>>(g, "gamma");
  c.grid.costs = field<std::vector<std::vector<double>>>(g, "costs");
  c.grid.discount = field_or<std::vector<double>>(g, "discount", {});
  if (c.grid.kappa.empty() || c.grid.gamma.empty() || c.grid.costs.empty()) {
    throw ConfigError("grid needs non-empty kappa, gamma and costs");
  }
  if (c.mode == Mode::infinite && c.grid.discount.empty()) throw ConfigError("infinite mode needs grid.discount");
  if (c.mode == Mode::one_period && !c.grid.discount.empty()) {
    throw ConfigError("grid.discount is only meaningful in infinite mode");
  }
  for (const auto& cost : c.grid.costs) {
    if (cost.size() != c.grid.costs.front().size()) throw ConfigError("grid costs differ in length");
  }

  if (!j.contains("truth")) throw ConfigError("config field 'truth' is required");
  const Json& t = j.at("truth");
  if (t.is_number_integer()) {
    c.truth_index = t.get<std::size_t>();
  } else if (t.is_object() && t.contains("index")) {
    c.truth_index = field<std::size_t>(t, "index");
  } else if (t.is_object()) {
    ExplicitTruth e;
    e.cost = field<std::vector<double>>(t, "cost");
    e.kappa = field<double>(t, "kappa");
    e.gamma = field<double>(t, "gamma");
    if (c.mode == Mode::infinite) e.discount = field<double>(t, "discount");
    if (e.cost.size() != c.num_states()) throw ConfigError("truth cost length differs from the grid");
    c.truth = e;
  } else {
    throw ConfigError("truth must be an index or an object");
  }

  c.pool_size = field_or<std::size_t>(j, "poolSize", c.pool_size);
  c.num_actions = field_or<std::size_t>(j, "numActions", c.num_actions);
  c.rounds = field_or<std::size_t>(j, "rounds", c.rounds);
  c.runs = field_or<std::size_t>(j, "runs", c.runs);
  c.k = field_or<double>(j, "k", c.k);
  c.strategy = parse_strategy(field_or<std::string>(j, "strategy", "uniform"));
  c.master_seed = field_or<std::uint64_t>(j, "masterSeed", c.master_seed);
  c.value_tol = field_or<double>(j, "valueTol", c.value_tol);
  c.shared_pool = field_or<bool>(j, "sharedPool", c.shared_pool);
  c.value_cache_dir = field_or<std::string>(j, "valueCacheDir", "");

  if (c.pool_size == 0) throw ConfigError("poolSize must be positive");
  if (c.num_actions == 0) throw ConfigError("numActions must be positive");
  if (c.rounds == 0 || c.runs == 0) throw ConfigError("rounds and runs must be positive");
  if (!(c.k >= 0.0) || !std::isfinite(c.k)) throw ConfigError("k must be finite and non-negative");
  if (!(c.value_tol > 0.0)) throw ConfigError("valueTol must be positive");

  // Building the candidates validates costs, spectra and distinctness.
  try {
    const std::size_t n = c.mode == Mode::one_period ? one_period_candidates(c.grid).size()
                                                     : infinite_candidates(c.grid).size();
    if (c.mode == Mode::one_period) {
      validate_candidates(one_period_candidates(c.grid));
    } else {
      validate_candidates(infinite_candidates(c.grid));
    }
    if (c.truth_index && *c.truth_index >= n) throw ConfigError("truth index out of range");
    if (c.truth) {
      CostFunction cost(c.truth->cost);
      Spectrum spec = family_spectrum(c.truth->kappa, c.truth->gamma);
      if (c.mode == Mode::infinite) RiskAversionInf(cost, spec, c.truth->discount);
    }
  } catch (const DomainError& e) {
    throw ConfigError(std::string("invalid candidate grid or truth: ") + e.what());
  }
  return c;
}

Json to_json(const ScenarioConfig& c) {
  Json grid = {{"kappa", c.grid.kappa}, {"gamma", c.grid.gamma}, {"costs", c.grid.costs}};
  if (c.mode == Mode::infinite) grid["discount"] = c.grid.discount;
  Json j = {{"mode", std::string(to_string(c.mode))},
            {"grid", grid},
            {"poolSize", c.pool_size},
            {"numActions", c.num_actions},
            {"rounds", c.rounds},
            {"runs", c.runs},
            {"k", c.k},
            {"strategy", std::string(to_string(c.strategy))},
            {"masterSeed", c.master_seed},
            {"valueTol", c.value_tol},
            {"sharedPool", c.shared_pool}};
  if (c.truth_index) {
    j["truth"] = *c.truth_index;
  } else if (c.truth) {
    j["truth"] = {{"cost", c.truth->cost}, {"kappa", c.truth->kappa}, {"gamma", c.truth->gamma}};
    if (c.mode == Mode::infinite) j["truth"]["discount"] = c.truth->discount;
  }
  if (!c.value_cache_dir.empty()) j["valueCacheDir"] = c.value_cache_dir;
  return j;
}

Trace run_scenario(const ScenarioConfig& config) {
  if (!config.truth_index && !config.truth) throw ConfigError("scenario has no truth");
  Trace trace;
  trace.mode = config.mode;
  trace.runs = config.runs;
  trace.rounds = config.rounds;
  trace.num_candidates = config.grid.size(config.mode);
  trace.truth_index = config.truth_index;
  trace.rows.reserve(config.runs * config.rounds);
  const Rng master(config.master_seed);
  for (std::size_t run = 0; run < config.runs; ++run) {
    const Rng run_rng = master.split(run);
    if (config.mode == Mode::one_period) {
      run_one_period(config, run, run_rng, trace);
    } else {
      run_infinite(config, run, run_rng, trace);
    }
  }
  return trace;
}

void write_trace_csv(const Trace& trace, std::ostream& out) {
  out << "run,round,env_index,response";
  for (std::size_t c = 0; c < trace.num_candidates; ++c) out << ",regret_" << c;
  for (std::size_t c = 0; c < trace.num_candidates; ++c) out << ",post_" << c;
  out << '\n';
  for (const auto& row : trace.rows) {
    out << row.run << ',' << row.round << ',' << row.env_index << ',';
    for (std::size_t x = 0; x < row.response.size(); ++x) out << (x ? ";" : "") << row.response[x];
    for (double r : row.regrets) out << ',' << fmt(r);
    for (double p : row.posterior) out << ',' << fmt(p);
    out << '\n';
  }
}

Trace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("trace is empty");
  const auto header = split(line, ',');
  if (header.size() < 4 || header[0] != "run" || header[1] != "round" || header[2] != "env_index" ||
      header[3] != "response" || (header.size() - 4) % 2 != 0) {
    throw ConfigError("trace header is not run,round,env_index,response,regret_*,post_*");
  }
  Trace trace;
  trace.num_candidates = (header.size() - 4) / 2;
  bool infinite = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) throw ConfigError("trace row has " + std::to_string(cells.size()) + " cells");
    TraceRow row;
    row.run = parse_index(cells[0]);
    row.round = parse_index(cells[1]);
    row.env_index = parse_index(cells[2]);
    for (const auto& a : split(cells[3], ';')) row.response.push_back(parse_index(a));
    infinite = infinite || row.response.size() > 1;
    for (std::size_t c = 0; c < trace.num_candidates; ++c) {
      row.regrets.push_back(parse_double(cells[4 + c]));
      row.posterior.push_back(parse_double(cells[4 + trace.num_candidates + c]));
    }
    trace.runs = std::max(trace.runs, row.run + 1);
    trace.rounds = std::max(trace.rounds, row.round);
    trace.rows.push_back(std::move(row));
  }
  trace.mode = infinite ? Mode::infinite : Mode::one_period;
  if (trace.rows.size() != trace.runs * trace.rounds) throw ConfigError("trace is not a full runs x rounds table");
  for (std::size_t i = 0; i < trace.rows.size(); ++i) {
    const auto& r = trace.rows[i];
    if (r.run != i / trace.rounds || r.round != i % trace.rounds + 1) {
      throw ConfigError("trace rows are not ordered by run, then round");
    }
  }
  return trace;
}

Json trace_sidecar(const Trace& trace, const ScenarioConfig& config) {
  return {{"config", to_json(config)},
          {"numCandidates", trace.num_candidates},
          {"rows", trace.rows.size()},
          {"nearTies", trace.near_ties}};
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DomainError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<SummaryRow> summarize(const Trace& trace, std::span<const double> quantiles,
                                  std::span<const std::size_t> columns) {
  if (trace.rows.empty()) throw DomainError("cannot summarize an empty trace");
  for (std::size_t c : columns) {
    if (c >= trace.num_candidates) throw DomainError("posterior column out of range");
  }
  std::vector<SummaryRow> out;
  std::vector<double> sample(trace.runs);
  for (std::size_t round = 1; round <= trace.rounds; ++round) {
    double sum = 0.0;
    for (std::size_t run = 0; run < trace.runs; ++run) {
      double mass = 0.0;
      for (std::size_t c : columns) mass += trace.at(run, round).posterior[c];
      sample[run] = mass;
      sum += mass;
    }
    SummaryRow row{round, sum / static_cast<double>(trace.runs), {}};
    for (double q : quantiles) row.quantiles.push_back(quantile(sample, q));
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<SweepPoint> sweep_learning_rate(const ScenarioConfig& config, std::span<const double> k_values) {
  if (!config.truth_index) throw ConfigError("learning-rate sweeps need the truth inside the grid");
  std::vector<SweepPoint> out;
  for (double k : k_values) {
    ScenarioConfig c = config;
    c.k = k;
    const Trace trace = run_scenario(c);
    SweepPoint pt{k, 0.0, {}};
    for (std::size_t run = 0; run < trace.runs; ++run) {
      pt.per_run.push_back(trace.at(run, trace.rounds).posterior[*config.truth_index]);
      pt.mean += pt.per_run.back();
    }
    pt.mean /= static_cast<double>(trace.runs);
    out.push_back(std::move(pt));
  }
  return out;
}

MisspecResult misspec_error(std::span<const RiskAversion> cands, const RiskAversion& truth,
                            std::span<const double> state_probs) {
  if (cands.empty()) throw DomainError("candidate set must be non-empty");
  if (!is_simplex_point(state_probs) || state_probs.size() != truth.cost.size()) {
    throw DomainError("reference law must be a probability vector over states");
  }
  const double target = rho_outcomes(truth.spectrum, truth.cost.costs(), state_probs);
  MisspecResult best{std::numeric_limits<double>::infinity(), 0};
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (cands[i].cost.size() != state_probs.size()) throw DomainError("candidate and reference disagree on |X|");
    const double gap = std::abs(target - rho_outcomes(cands[i].spectrum, cands[i].cost.costs(), state_probs));
    if (gap < best.error) best = {gap, i};
  }
  return best;
}

}  // namespace riskelicit
