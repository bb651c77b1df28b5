#pragma once

// JSON / CSV encodings of the on-disk artifacts: levels.json,
// manifests.json and probe results. Objects keep insertion order and all
// numbers are written in shortest round-trip form, so equal inputs give
// byte-identical files.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cog/levels.hpp"
#include "cog/probe.hpp"

namespace cog {

using ordered_json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kLevelsSchema = "cog.levels/1";
inline constexpr const char* kManifestsSchema = "cog.manifests/1";
inline constexpr const char* kResultsSchema = "cog.probe-results/1";

/// 16 lowercase hex digits.
std::string hash_hex(std::uint64_t h);

/// FNV-1a of the compact dump.
std::string json_fingerprint(const ordered_json& j);

struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string tool_version = kToolVersion;
};

ordered_json to_json(const Provenance& p);
Provenance provenance_from_json(const nlohmann::ordered_json& j);

/// Fingerprint of the level membership lists only.
std::string levels_hash(const LevelSet& levels);

ordered_json levels_to_json(const LevelSet& levels, const RankedList& ranked, std::string_view measure,
                            const Provenance& provenance);
LevelSet levels_from_json(const ordered_json& j);

ordered_json manifests_to_json(const std::vector<LevelManifest>& manifests, const std::string& levels_hash,
                               const Provenance& provenance);
std::vector<LevelManifest> manifests_from_json(const ordered_json& j, std::string* levels_hash = nullptr);

struct ResultsMeta {
  std::string model;
  std::string category;
  std::string levels_hash;
  Provenance provenance;
  std::vector<std::size_t> zero_rows_per_level;
};

ordered_json results_to_json(const ProbeResult& result, const ProbeConfig& cfg, const ResultsMeta& meta);

/// Columns level,shots,seed,lr,wd,val_top1,test_top1,mean_top1,std_top1,status.
/// Unit rows leave mean/std empty; aggregate rows use seed "all".
std::string results_to_csv(const ProbeResult& result);

/// Shortest round-trip decimal form.
std::string format_number(double v);

}  // namespace cog
