#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "riskelicit/agent.hpp"
#include "riskelicit/environments.hpp"
#include "riskelicit/risk.hpp"

namespace riskelicit {

using Json = nlohmann::json;

// Spectrum: {"atoms":[{"alpha":0.0,"weight":0.25}, ...]}
Json to_json(const Spectrum& s);
Spectrum spectrum_from_json(const Json& j);

// CostFunction: {"costs":[1.0,0.5,0.0]}; a bare array is also accepted.
Json to_json(const CostFunction& c);
CostFunction cost_from_json(const Json& j);

// {"cost":{...},"spectrum":{...}} plus "discount" for the infinite-horizon form.
Json to_json(const RiskAversion& a);
Json to_json(const RiskAversionInf& a);
RiskAversion aversion_from_json(const Json& j);
RiskAversionInf aversion_inf_from_json(const Json& j);

// Pools: {"kind":"one-period"|"controlled","seed":...,"items":[...]}.
// One-period items are state-major [x][a]; controlled items are [a][x][y].
Json to_json(const OnePeriodPool& pool);
Json to_json(const ControlledPool& pool);
OnePeriodPool one_period_pool_from_json(const Json& j);
ControlledPool controlled_pool_from_json(const Json& j);

/// Sidecar file name for a value cache key.
std::string value_cache_filename(const ValueCache::Key& key);
Json to_json(const ValueCache& cache);
ValueCache value_cache_from_json(const Json& j);

/// Reads `dir/<filename>` when present and its key matches; nullopt otherwise.
std::optional<ValueCache> load_value_cache(const std::filesystem::path& dir, const ValueCache::Key& key);
void save_value_cache(const std::filesystem::path& dir, const ValueCache& cache);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace riskelicit
