#include "riskelicit/serialization.hpp"

#include <cstdio>
#include <fstream>

#include "riskelicit/errors.hpp"

namespace riskelicit {

namespace {

// Wraps JSON type errors and invalid values so callers see one exception
// family for bad input.
template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed ") + what + ": " + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("invalid ") + what + ": " + e.what());
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

Json to_json(const Spectrum& s) {
  Json atoms = Json::array();
  for (const auto& a : s.atoms()) atoms.push_back({{"alpha", a.alpha}, {"weight", a.weight}});
  return {{"atoms", atoms}};
}

Spectrum spectrum_from_json(const Json& j) {
  return guarded("spectrum", [&] {
    std::vector<Spectrum::Atom> atoms;
    for (const auto& a : j.at("atoms")) atoms.push_back({a.at("alpha").get<double>(), a.at("weight").get<double>()});
    return Spectrum(std::move(atoms));
  });
}

Json to_json(const CostFunction& c) { return {{"costs", std::vector<double>(c.costs().begin(), c.costs().end())}}; }

CostFunction cost_from_json(const Json& j) {
  return guarded("cost function", [&] {
    return CostFunction(j.is_array() ? j.get<std::vector<double>>() : j.at("costs").get<std::vector<double>>());
  });
}

Json to_json(const RiskAversion& a) { return {{"cost", to_json(a.cost)}, {"spectrum", to_json(a.spectrum)}}; }

Json to_json(const RiskAversionInf& a) {
  return {{"cost", to_json(a.cost)}, {"spectrum", to_json(a.spectrum)}, {"discount", a.discount}};
}

RiskAversion aversion_from_json(const Json& j) {
  return guarded("risk aversion", [&] {
    return RiskAversion{cost_from_json(j.at("cost")), spectrum_from_json(j.at("spectrum"))};
  });
}

RiskAversionInf aversion_inf_from_json(const Json& j) {
  return guarded("risk aversion", [&] {
    return RiskAversionInf(cost_from_json(j.at("cost")), spectrum_from_json(j.at("spectrum")),
                           j.at("discount").get<double>());
  });
}

Json to_json(const OnePeriodPool& pool) {
  Json items = Json::array();
  for (const auto& env : pool.items) {
    Json m = Json::array();
    for (std::size_t x = 0; x < env.num_states(); ++x) {
      Json row = Json::array();
      for (std::size_t a = 0; a < env.num_actions(); ++a) row.push_back(env.prob(a, x));
      m.push_back(row);
    }
    items.push_back(m);
  }
  return {{"kind", "one-period"}, {"seed", pool.seed}, {"items", items}};
}

Json to_json(const ControlledPool& pool) {
  Json items = Json::array();
  for (const auto& t : pool.items) {
    Json mats = Json::array();
    for (std::size_t a = 0; a < t.num_actions(); ++a) {
      Json m = Json::array();
      for (std::size_t x = 0; x < t.num_states(); ++x) {
        const auto r = t.row(a, x);
        m.push_back(std::vector<double>(r.begin(), r.end()));
      }
      mats.push_back(m);
    }
    items.push_back(mats);
  }
  return {{"kind", "controlled"}, {"seed", pool.seed}, {"items", items}};
}

OnePeriodPool one_period_pool_from_json(const Json& j) {
  return guarded("pool", [&] {
    if (j.at("kind") != "one-period") throw ConfigError("expected a one-period pool");
    OnePeriodPool pool;
    pool.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& m : j.at("items")) {
      const auto rows = m.get<std::vector<std::vector<double>>>();
      if (rows.empty()) throw ConfigError("empty pool item");
      std::vector<std::vector<double>> cols(rows.front().size(), std::vector<double>(rows.size()));
      for (std::size_t x = 0; x < rows.size(); ++x) {
        if (rows[x].size() != cols.size()) throw ConfigError("ragged pool item");
        for (std::size_t a = 0; a < cols.size(); ++a) cols[a][x] = rows[x][a];
      }
      pool.items.emplace_back(std::move(cols));
    }
    if (pool.items.empty()) throw ConfigError("pool must be non-empty");
    return pool;
  });
}

ControlledPool controlled_pool_from_json(const Json& j) {
  return guarded("pool", [&] {
    if (j.at("kind") != "controlled") throw ConfigError("expected a controlled pool");
    ControlledPool pool;
    pool.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& m : j.at("items")) pool.items.emplace_back(m.get<std::vector<std::vector<std::vector<double>>>>());
    if (pool.items.empty()) throw ConfigError("pool must be non-empty");
    return pool;
  });
}

std::string value_cache_filename(const ValueCache::Key& key) {
  char tol[32];
  std::snprintf(tol, sizeof tol, "%g", key.tol);
  return "vcache-" + hex64(key.pool_seed) + "-" + std::to_string(key.pool_size) + "-" + hex64(key.candidate_hash) +
         "-" + tol + ".json";
}

Json to_json(const ValueCache& cache) {
  Json values = Json::array();
  for (std::size_t p = 0; p < cache.pool_size(); ++p) {
    for (std::size_t c = 0; c < cache.num_candidates(); ++c) values.push_back(cache.at(p, c).values);
  }
  const auto& k = cache.key();
  return {{"poolSeed", k.pool_seed},
          {"poolSize", k.pool_size},
          {"candidateHash", hex64(k.candidate_hash)},
          {"tol", k.tol},
          {"numCandidates", cache.num_candidates()},
          {"values", values}};
}

ValueCache value_cache_from_json(const Json& j) {
  return guarded("value cache", [&] {
    ValueCache::Key key;
    key.pool_seed = j.at("poolSeed").get<std::uint64_t>();
    key.pool_size = j.at("poolSize").get<std::size_t>();
    key.candidate_hash = std::stoull(j.at("candidateHash").get<std::string>(), nullptr, 16);
    key.tol = j.at("tol").get<double>();
    std::vector<ValueFunction> values;
    for (const auto& v : j.at("values")) values.push_back({v.get<std::vector<double>>()});
    return ValueCache(key, j.at("numCandidates").get<std::size_t>(), std::move(values));
  });
}

std::optional<ValueCache> load_value_cache(const std::filesystem::path& dir, const ValueCache::Key& key) {
  const auto path = dir / value_cache_filename(key);
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    auto cache = value_cache_from_json(read_json_file(path));
    if (cache.key() == key) return cache;
  } catch (const std::exception&) {
    // A corrupt sidecar is recomputed and overwritten.
  }
  return std::nullopt;
}

void save_value_cache(const std::filesystem::path& dir, const ValueCache& cache) {
  std::filesystem::create_directories(dir);
  write_json_file(dir / value_cache_filename(cache.key()), to_json(cache));
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace riskelicit
