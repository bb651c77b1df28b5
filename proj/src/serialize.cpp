#include "cog/serialize.hpp"

#include <cmath>

#include <fmt/format.h>

#include "cog/error.hpp"
#include "cog/rng.hpp"

namespace cog {

namespace {

ordered_json number_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

template <typename J>
const J& require(const J& j, const char* key, const char* where) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorCode::SchemaMismatch, std::string(where) + ": missing field '" + key + "'");
  }
  return j.at(key);
}

void check_schema(const ordered_json& j, const char* expected) {
  const auto& schema = require(j, "schema", expected);
  if (!schema.is_string() || schema.get<std::string>() != expected) {
    throw Error(ErrorCode::SchemaMismatch, "expected schema '" + std::string(expected) + "', found " + schema.dump());
  }
}

}  // namespace

std::string hash_hex(std::uint64_t h) { return fmt::format("{:016x}", h); }

std::string json_fingerprint(const ordered_json& j) { return hash_hex(fnv1a64(j.dump())); }

std::string format_number(double v) { return fmt::format("{}", v); }

ordered_json to_json(const Provenance& p) {
  ordered_json j;
  j["config_hash"] = p.config_hash;
  j["seed"] = p.seed;
  j["tool_version"] = p.tool_version;
  return j;
}

Provenance provenance_from_json(const nlohmann::ordered_json& j) {
  Provenance p;
  p.config_hash = require(j, "config_hash", "provenance").get<std::string>();
  p.seed = require(j, "seed", "provenance").get<std::uint64_t>();
  p.tool_version = require(j, "tool_version", "provenance").get<std::string>();
  return p;
}

std::string levels_hash(const LevelSet& levels) {
  ordered_json j = ordered_json::array();
  for (const auto& level : levels.levels) j.push_back(level);
  return json_fingerprint(j);
}

ordered_json levels_to_json(const LevelSet& levels, const RankedList& ranked, std::string_view measure,
                            const Provenance& provenance) {
  ordered_json j;
  j["schema"] = kLevelsSchema;
  j["provenance"] = to_json(provenance);
  j["levels_hash"] = levels_hash(levels);
  auto& params = j["params"];
  params["K"] = levels.k;
  params["S"] = levels.s;
  params["measure"] = measure;
  params["gap_policy"] = levels.gap_policy;
  params["seed"] = provenance.seed;
  j["gaps"] = levels.gaps;
  j["levels"] = levels.levels;
  j["discarded"] = levels.discarded;
  auto& sims = j["similarities"];
  sims = ordered_json::object();
  for (const auto& e : ranked.entries) sims[e.id] = e.similarity;
  return j;
}

LevelSet levels_from_json(const ordered_json& j) {
  check_schema(j, kLevelsSchema);
  LevelSet out;
  const auto& params = require(j, "params", "levels.json");
  out.k = require(params, "K", "params").get<std::size_t>();
  out.s = require(params, "S", "params").get<std::size_t>();
  out.gap_policy = require(params, "gap_policy", "params").get<std::string>();
  out.levels = require(j, "levels", "levels.json").get<std::vector<std::vector<ConceptId>>>();
  out.discarded = require(j, "discarded", "levels.json").get<std::vector<ConceptId>>();
  out.gaps = require(j, "gaps", "levels.json").get<std::vector<std::size_t>>();
  return out;
}

ordered_json manifests_to_json(const std::vector<LevelManifest>& manifests, const std::string& levels_hash,
                               const Provenance& provenance) {
  ordered_json j;
  j["schema"] = kManifestsSchema;
  j["provenance"] = to_json(provenance);
  j["levels_hash"] = levels_hash;
  auto& levels = j["levels"];
  levels = ordered_json::array();
  for (const auto& manifest : manifests) {
    ordered_json level = ordered_json::object();
    for (const auto& [concept_id, entry] : manifest) {
      level[concept_id]["train"] = entry.train;
      level[concept_id]["test"] = entry.test;
    }
    levels.push_back(std::move(level));
  }
  return j;
}

std::vector<LevelManifest> manifests_from_json(const ordered_json& j, std::string* levels_hash_out) {
  check_schema(j, kManifestsSchema);
  if (levels_hash_out) *levels_hash_out = require(j, "levels_hash", "manifests.json").get<std::string>();
  std::vector<LevelManifest> out;
  for (const auto& level : require(j, "levels", "manifests.json")) {
    LevelManifest manifest;
    for (const auto& [concept_id, entry] : level.items()) {
      SplitManifestEntry e;
      e.train = require(entry, "train", "manifest entry").get<std::vector<std::string>>();
      e.test = require(entry, "test", "manifest entry").get<std::vector<std::string>>();
      manifest.emplace_back(concept_id, std::move(e));
    }
    out.push_back(std::move(manifest));
  }
  return out;
}

ordered_json results_to_json(const ProbeResult& result, const ProbeConfig& cfg, const ResultsMeta& meta) {
  ordered_json j;
  j["schema"] = kResultsSchema;
  j["model"] = meta.model;
  j["category"] = meta.category;
  j["provenance"] = to_json(meta.provenance);
  j["levels_hash"] = meta.levels_hash;
  j["levels"] = result.level_names;

  auto& c = j["config"];
  c["batch_size"] = cfg.batch_size;
  c["momentum"] = cfg.momentum;
  c["epochs"] = cfg.epochs;
  c["trials"] = cfg.trials;
  c["val_fraction"] = cfg.val_fraction;
  c["seeds"] = cfg.seeds;
  c["lr_range"] = {cfg.lr_min, cfg.lr_max};
  c["wd_range"] = {cfg.wd_min, cfg.wd_max};
  c["divergence_loss"] = cfg.divergence_loss;
  auto& shots = c["shots"];
  shots = ordered_json::array();
  for (auto s : cfg.shot_counts) shots.push_back(shots_label(s));
  c["sampler"] = "log-uniform-random";
  c["lr_schedule"] = "constant";

  if (!meta.zero_rows_per_level.empty()) j["zero_feature_rows"] = meta.zero_rows_per_level;

  auto& units = j["units"];
  units = ordered_json::array();
  for (const auto& u : result.units) {
    ordered_json row;
    row["level"] = result.level_names[u.level];
    row["shots"] = shots_label(u.shots);
    row["seed"] = u.seed_index;
    row["status"] = u.ok ? "ok" : "failed";
    if (u.ok) {
      row["lr"] = u.lr;
      row["wd"] = u.wd;
      row["val_top1"] = u.val_top1;
      row["test_top1"] = u.test_top1;
    } else {
      row["error"] = u.error;
    }
    row["val_is_train"] = u.val_is_train;
    row["clamped_classes"] = u.clamped_classes;
    row["diverged_trials"] = u.diverged_trials;
    units.push_back(std::move(row));
  }
  auto& aggs = j["aggregates"];
  aggs = ordered_json::array();
  for (const auto& a : result.aggregates) {
    ordered_json row;
    row["level"] = result.level_names[a.level];
    row["shots"] = shots_label(a.shots);
    row["mean_top1"] = number_or_null(a.mean_top1);
    row["std_top1"] = number_or_null(a.std_top1);
    row["ok_seeds"] = a.ok_seeds;
    row["failed_seeds"] = a.failed_seeds;
    aggs.push_back(std::move(row));
  }
  return j;
}

std::string results_to_csv(const ProbeResult& result) {
  std::string out = "level,shots,seed,lr,wd,val_top1,test_top1,mean_top1,std_top1,status\n";
  for (const auto& u : result.units) {
    out += fmt::format("{},{},{},", result.level_names[u.level], shots_label(u.shots), u.seed_index);
    if (u.ok) {
      out += fmt::format("{},{},{},{},,,ok\n", format_number(u.lr), format_number(u.wd), format_number(u.val_top1),
                         format_number(u.test_top1));
    } else {
      out += ",,,,,,failed\n";
    }
  }
  for (const auto& a : result.aggregates) {
    out += fmt::format("{},{},all,,,,,", result.level_names[a.level], shots_label(a.shots));
    if (a.ok_seeds > 0) {
      out += fmt::format("{},{},ok\n", format_number(a.mean_top1), format_number(a.std_top1));
    } else {
      out += ",,failed\n";
    }
  }
  return out;
}

}  // namespace cog
