#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "cog/config.hpp"
#include "cog/error.hpp"
#include "cog/features.hpp"
#include "cog/levels.hpp"
#include "cog/probe.hpp"
#include "cog/report.hpp"
#include "cog/rng.hpp"
#include "cog/semsim.hpp"
#include "cog/serialize.hpp"
#include "cog/taxonomy.hpp"

namespace cog::cli {

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Shared plumbing

struct Common {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  unsigned jobs = 1;
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--config", common.config_path, "TOML-style run configuration");
  cmd->add_option("--seed", common.seed, "global seed (u64)");
  cmd->add_option("--out", common.out, "output directory");
  cmd->add_option("--jobs", common.jobs, "worker threads; never changes results")->check(CLI::PositiveNumber);
}

Config load_config(const Common& common) {
  Config cfg = common.config_path ? Config::load(*common.config_path) : Config{};
  if (common.seed) cfg.set("seed", *common.seed);
  if (common.out) cfg.set("out", fs::absolute(*common.out).string());
  return cfg;
}

template <typename T>
void override_value(Config& cfg, std::string_view key, const std::optional<T>& v) {
  if (v) cfg.set(key, *v);
}

void override_path(Config& cfg, std::string_view key, const std::optional<std::string>& v) {
  if (v) cfg.set(key, fs::absolute(*v).string());
}

fs::path require_path(const Config& cfg, std::string_view key, std::string_view flag) {
  auto p = cfg.get_path(key);
  if (!p) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("missing {} (config key {})", flag, key));
  }
  if (!fs::exists(*p)) throw Error(ErrorCode::Io, "no such file: " + p->string());
  return *p;
}

std::optional<fs::path> optional_path(const Config& cfg, std::string_view key) {
  auto p = cfg.get_path(key);
  if (p && !fs::exists(*p)) throw Error(ErrorCode::Io, "no such file: " + p->string());
  return p;
}

std::ifstream open_input(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + p.string());
  return in;
}

std::string read_file(const fs::path& p) {
  auto in = open_input(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string file_fingerprint(const fs::path& p) { return hash_hex(fnv1a64(read_file(p))); }

void write_text(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
  if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
}

void write_json(const fs::path& p, const ordered_json& j) { write_text(p, j.dump(2) + "\n"); }

fs::path output_dir(const Config& cfg) {
  fs::path out = cfg.get_path("out").value_or(fs::path("out"));
  fs::create_directories(out);
  return out;
}

std::uint64_t global_seed(const Config& cfg) {
  const auto* v = cfg.find("seed");
  if (!v) return 0;
  if (!v->is_number_integer()) throw Error(ErrorCode::InvalidArgument, "seed must be an integer");
  return v->get<std::uint64_t>();
}

template <typename T>
T positive(std::optional<std::int64_t> v, T fallback, std::string_view key) {
  if (!v) return fallback;
  if (*v < 1) throw Error(ErrorCode::InvalidArgument, fmt::format("{} must be >= 1", key));
  return static_cast<T>(*v);
}

// One id per line; '#' comments; only the first tab-separated field counts.
std::vector<ConceptId> read_id_list(const fs::path& p) {
  auto in = open_input(p);
  std::vector<ConceptId> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    auto id = line.substr(first, line.find_first_of(" \t", first) - first);
    ids.push_back(std::move(id));
  }
  return ids;
}

std::vector<std::string> string_list(const Config& cfg, std::string_view key) {
  const auto* v = cfg.find(key);
  if (!v) return {};
  if (v->is_string()) return {v->get<std::string>()};
  if (!v->is_array() || !std::all_of(v->begin(), v->end(), [](const auto& x) { return x.is_string(); })) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("config key '{}' must be a string or list of strings", key));
  }
  return v->get<std::vector<std::string>>();
}

struct LoadedTaxonomy {
  Taxonomy taxonomy;
  MetaMap meta;
};

LoadedTaxonomy load_taxonomy(const fs::path& edges_path, const std::optional<fs::path>& meta_path) {
  auto edges_in = open_input(edges_path);
  std::vector<Edge> edges;
  try {
    edges = read_edges(edges_in);
  } catch (const Error& e) {
    throw Error(e.code(), edges_path.string() + ": " + e.what());
  }
  auto t = Taxonomy::from_edges(edges);
  MetaMap meta;
  if (meta_path) {
    auto meta_in = open_input(*meta_path);
    try {
      meta = read_meta(meta_in, t);
    } catch (const Error& e) {
      throw Error(e.code(), meta_path->string() + ": " + e.what());
    }
  }
  return {std::move(t), std::move(meta)};
}

// ---------------------------------------------------------------------------
// cog taxonomy validate

struct TaxonomyArgs {
  Common common;
  std::optional<std::string> edges, meta;
};

int cmd_taxonomy_validate(const TaxonomyArgs& a) {
  Config cfg = load_config(a.common);
  override_path(cfg, "taxonomy.edges", a.edges);
  override_path(cfg, "taxonomy.meta", a.meta);
  const auto [t, meta] = load_taxonomy(require_path(cfg, "taxonomy.edges", "--edges"), optional_path(cfg, "taxonomy.meta"));
  std::size_t leaves = 0, max_depth = 0, multi_parent = 0;
  for (NodeIndex n = 0; n < t.size(); ++n) {
    leaves += t.is_leaf(n) ? 1 : 0;
    multi_parent += t.parents(n).size() > 1 ? 1 : 0;
    max_depth = std::max(max_depth, t.depth(n));
  }
  std::cout << fmt::format("ok: nodes={} edges={} root={} leaves={} multi_parent={} max_depth={} meta_entries={}\n",
                           t.size(), t.edges().size(), t.id(t.root()), leaves, multi_parent, max_depth, meta.size());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// cog sim

struct SimArgs {
  Common common;
  std::optional<std::string> edges, measure, seen_file, scores, concept_id;
  std::vector<std::string> pair;
};

int cmd_sim(const SimArgs& a) {
  Config cfg = load_config(a.common);
  override_path(cfg, "taxonomy.edges", a.edges);
  override_value(cfg, "levels.measure", a.measure);
  override_path(cfg, "levels.seen", a.seen_file);
  override_path(cfg, "levels.scores", a.scores);
  const auto [t, meta] = load_taxonomy(require_path(cfg, "taxonomy.edges", "--edges"), std::nullopt);
  const auto measure_name = cfg.get_string("levels.measure").value_or("lin");
  const auto kind = parse_measure(measure_name);
  if (!kind) throw Error(ErrorCode::InvalidArgument, "unknown measure '" + measure_name + "'");

  if (!a.pair.empty()) {
    if (*kind == MeasureKind::External) {
      throw Error(ErrorCode::InvalidArgument, "--pair is not available for the external measure");
    }
    const PairwiseMeasure m(t, *kind);
    std::cout << format_number(m(a.pair[0], a.pair[1])) << "\n";
    return kExitOk;
  }
  if (!a.concept_id) throw Error(ErrorCode::InvalidArgument, "give --pair C1 C2 or --seen-file F --concept C");
  const NodeIndex c = t.index_of(*a.concept_id);
  if (*kind == MeasureKind::External) {
    auto in = open_input(require_path(cfg, "levels.scores", "--scores"));
    std::cout << format_number(ExternalScores::read(in, t).score(c)) << "\n";
    return kExitOk;
  }
  std::vector<NodeIndex> seen;
  for (const auto& id : read_id_list(require_path(cfg, "levels.seen", "--seen-file"))) seen.push_back(t.index_of(id));
  const PairwiseMeasure m(t, *kind);
  std::cout << format_number(set_similarity(m, seen, c)) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// cog levels build

struct LevelsArgs {
  Common common;
  std::optional<std::string> edges, meta, seen_file, images, banned_file, exclusions, measure, scores, rerank;
  std::vector<std::string> banned;
  std::optional<std::int64_t> k, s, min_images, train_cap, test_size;
};

int cmd_levels_build(const LevelsArgs& a) {
  Config cfg = load_config(a.common);
  override_path(cfg, "taxonomy.edges", a.edges);
  override_path(cfg, "taxonomy.meta", a.meta);
  override_path(cfg, "levels.seen", a.seen_file);
  override_path(cfg, "levels.images", a.images);
  override_path(cfg, "levels.banned_file", a.banned_file);
  override_path(cfg, "levels.exclusions", a.exclusions);
  override_path(cfg, "levels.scores", a.scores);
  override_path(cfg, "levels.rerank", a.rerank);
  override_value(cfg, "levels.measure", a.measure);
  if (!a.banned.empty()) cfg.set("levels.banned", a.banned);
  override_value(cfg, "levels.K", a.k);
  override_value(cfg, "levels.S", a.s);
  override_value(cfg, "levels.min_images", a.min_images);
  override_value(cfg, "levels.train_cap", a.train_cap);
  override_value(cfg, "levels.test_size", a.test_size);

  const auto edges_path = require_path(cfg, "taxonomy.edges", "--edges");
  const auto meta_path = optional_path(cfg, "taxonomy.meta");
  const auto seen_path = require_path(cfg, "levels.seen", "--seen-file");
  const auto images_path = optional_path(cfg, "levels.images");
  const auto banned_path = optional_path(cfg, "levels.banned_file");
  const auto exclusions_path = optional_path(cfg, "levels.exclusions");
  const auto scores_path = optional_path(cfg, "levels.scores");
  const auto rerank_path = optional_path(cfg, "levels.rerank");
  const auto k = positive<std::size_t>(cfg.get_int("levels.K"), 5, "levels.K");
  const auto s = positive<std::size_t>(cfg.get_int("levels.S"), 1000, "levels.S");
  const auto train_cap = positive<std::size_t>(cfg.get_int("levels.train_cap"), kDefaultTrainCap, "levels.train_cap");
  const auto test_size = positive<std::size_t>(cfg.get_int("levels.test_size"), kDefaultTestSize, "levels.test_size");
  const auto min_images = cfg.get_int("levels.min_images").value_or(782);
  if (min_images < 0) throw Error(ErrorCode::InvalidArgument, "levels.min_images must be >= 0");
  const auto measure_name = cfg.get_string("levels.measure").value_or("lin");
  const auto kind = parse_measure(measure_name);
  if (!kind) throw Error(ErrorCode::InvalidArgument, "unknown measure '" + measure_name + "'");
  if (*kind == MeasureKind::External && !scores_path) {
    throw Error(ErrorCode::InvalidArgument, "the external measure needs --scores (levels.scores)");
  }
  if (rerank_path && *kind != MeasureKind::External) {
    throw Error(ErrorCode::InvalidArgument, "--rerank is only meaningful with --measure external");
  }
  const std::uint64_t seed = global_seed(cfg);

  FilterRules rules;
  rules.seen = read_id_list(seen_path);
  rules.min_image_count = static_cast<std::uint64_t>(min_images);
  rules.banned_subtree_roots = string_list(cfg, "levels.banned");
  if (banned_path) {
    for (auto& id : read_id_list(*banned_path)) rules.banned_subtree_roots.push_back(std::move(id));
  }
  if (exclusions_path) rules.manual_exclusions = read_id_list(*exclusions_path);

  // Inputs enter the hash by content so the same run from another
  // directory hashes the same.
  ordered_json effective;
  effective["command"] = "levels build";
  effective["edges"] = file_fingerprint(edges_path);
  effective["meta"] = meta_path ? file_fingerprint(*meta_path) : "";
  effective["seen"] = file_fingerprint(seen_path);
  effective["images"] = images_path ? file_fingerprint(*images_path) : "";
  effective["banned"] = rules.banned_subtree_roots;
  effective["exclusions"] = exclusions_path ? file_fingerprint(*exclusions_path) : "";
  effective["scores"] = scores_path ? file_fingerprint(*scores_path) : "";
  effective["rerank"] = rerank_path ? file_fingerprint(*rerank_path) : "";
  effective["measure"] = measure_name;
  effective["K"] = k;
  effective["S"] = s;
  effective["min_images"] = min_images;
  effective["train_cap"] = train_cap;
  effective["test_size"] = test_size;
  effective["seed"] = seed;
  effective["tool_version"] = kToolVersion;
  const Provenance provenance{json_fingerprint(effective), seed, kToolVersion};

  const auto [t, meta] = load_taxonomy(edges_path, meta_path);

  std::unique_ptr<PairwiseMeasure> measure;
  std::unique_ptr<SeenScorer> scorer;
  std::optional<ExternalScores> external;
  if (*kind == MeasureKind::External) {
    auto in = open_input(*scores_path);
    external = ExternalScores::read(in, t);
  } else {
    measure = std::make_unique<PairwiseMeasure>(t, *kind);
    std::vector<NodeIndex> seen;
    for (const auto& id : rules.seen) {
      const auto n = t.find(id);
      if (!n) throw Error(ErrorCode::SeenNotInTaxonomy, "seen concept '" + id + "' is not in the taxonomy");
      seen.push_back(*n);
    }
    scorer = std::make_unique<SeenSetSimilarity>(*measure, std::move(seen));
  }
  const SeenScorer& active = external ? static_cast<const SeenScorer&>(*external) : *scorer;

  RankedList ranked;
  if (rerank_path) {
    const auto previous = levels_from_json(ordered_json::parse(read_file(*rerank_path)));
    ranked = rerank_level_concepts(t, previous, active, a.common.jobs);
    spdlog::info("re-ranking {} concepts from {}", ranked.size(), rerank_path->string());
  } else {
    FilterStats stats;
    const auto eligible = filter_eligible(t, meta, rules, &stats);
    spdlog::info("eligibility: removed seen={} seen_ancestors={} banned={} few_images={} non_leaf={} manual={}; {} eligible",
                 stats.seen, stats.seen_ancestors, stats.banned_subtrees, stats.too_few_images, stats.non_leaf,
                 stats.manual, eligible.size());
    ranked = rank_unseen(t, active, eligible, a.common.jobs);
  }

  const LevelSet levels = build_levels(ranked, k, s);
  const fs::path out = output_dir(cfg);
  write_json(out / "levels.json", levels_to_json(levels, ranked, measure_name, provenance));
  spdlog::info("wrote {}", (out / "levels.json").string());

  if (images_path) {
    auto in = open_input(*images_path);
    const auto images = read_image_list(in);
    const auto manifests = build_manifests(levels, images, train_cap, test_size, seed, a.common.jobs);
    write_json(out / "manifests.json", manifests_to_json(manifests, levels_hash(levels), provenance));
    spdlog::info("wrote {}", (out / "manifests.json").string());
  } else {
    spdlog::info("no image list given; skipping manifests.json");
  }
  for (std::size_t l = 0; l < levels.levels.size(); ++l) {
    std::cout << fmt::format("L{}: {} concepts", l + 1, levels.levels[l].size());
    if (l < levels.gaps.size()) std::cout << fmt::format(", gap {}", levels.gaps[l]);
    std::cout << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// cog features pack

struct PackArgs {
  std::string input, output;
};

int cmd_features_pack(const PackArgs& a) {
  auto in = open_input(a.input);
  FeatureTable t;
  try {
    t = read_feature_tsv(in);
  } catch (const Error& e) {
    throw Error(e.code(), a.input + ": " + e.what());
  }
  std::ofstream out(a.output, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + a.output);
  write_features(out, t);
  std::cout << fmt::format("packed {} rows x {} dims, {} classes -> {}\n", t.rows, t.dim, t.num_classes(), a.output);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// cog probe run

struct ProbeArgs {
  Common common;
  std::vector<std::string> levels;
  std::optional<std::string> manifests, model, category, shots, lr_range, wd_range;
  std::optional<std::int64_t> seeds, trials, epochs, batch_size;
  std::optional<double> momentum, val_fraction;
  bool no_normalize = false;
};

std::vector<std::size_t> parse_shots(const nlohmann::json& v) {
  std::vector<std::size_t> out;
  auto one = [&](const nlohmann::json& x) {
    if (x.is_string()) {
      const auto s = x.get<std::string>();
      if (s == "all" || s == "ALL") {
        out.push_back(kAllShots);
        return;
      }
      std::size_t pos = 0;
      const auto n = std::stoll(s, &pos);
      if (pos != s.size() || n < 1) throw Error(ErrorCode::InvalidArgument, "bad shot count '" + s + "'");
      out.push_back(static_cast<std::size_t>(n));
    } else if (x.is_number_integer() && x.get<std::int64_t>() >= 1) {
      out.push_back(x.get<std::size_t>());
    } else {
      throw Error(ErrorCode::InvalidArgument, "bad shot count " + x.dump());
    }
  };
  try {
    if (v.is_array()) {
      for (const auto& x : v) one(x);
    } else if (v.is_string()) {
      std::stringstream ss(v.get<std::string>());
      std::string item;
      while (std::getline(ss, item, ',')) one(item);
    } else {
      one(v);
    }
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::InvalidArgument, "bad shot list " + v.dump());
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "empty shot list");
  return out;
}

std::pair<double, double> parse_range(const nlohmann::json& v, std::string_view key) {
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) return {v[0].get<double>(), v[1].get<double>()};
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    const auto colon = s.find(':');
    try {
      if (colon != std::string::npos) return {std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
    } catch (const std::logic_error&) {
    }
  }
  throw Error(ErrorCode::InvalidArgument, fmt::format("{} must be LOW:HIGH or [low, high]", key));
}

ProbeConfig probe_config(const Config& cfg) {
  ProbeConfig p;
  p.batch_size = positive<std::size_t>(cfg.get_int("probe.batch_size"), p.batch_size, "probe.batch_size");
  p.epochs = positive<std::size_t>(cfg.get_int("probe.epochs"), p.epochs, "probe.epochs");
  p.trials = positive<std::size_t>(cfg.get_int("probe.trials"), p.trials, "probe.trials");
  p.seeds = positive<std::size_t>(cfg.get_int("probe.seeds"), p.seeds, "probe.seeds");
  p.momentum = cfg.get_double("probe.momentum").value_or(p.momentum);
  p.val_fraction = cfg.get_double("probe.val_fraction").value_or(p.val_fraction);
  p.divergence_loss = cfg.get_double("probe.divergence_loss").value_or(p.divergence_loss);
  if (const auto* v = cfg.find("probe.lr_range")) std::tie(p.lr_min, p.lr_max) = parse_range(*v, "probe.lr_range");
  if (const auto* v = cfg.find("probe.wd_range")) std::tie(p.wd_min, p.wd_max) = parse_range(*v, "probe.wd_range");
  if (const auto* v = cfg.find("probe.shots")) p.shot_counts = parse_shots(*v);
  p.validate();
  return p;
}

FeatureTable load_cogf(const fs::path& p, std::optional<std::size_t> classes = std::nullopt) {
  if (!fs::exists(p)) throw Error(ErrorCode::Io, "no such feature file: " + p.string());
  auto in = open_input(p);
  try {
    return load_features(in, classes);
  } catch (const Error& e) {
    throw Error(e.code(), p.string() + ": " + e.what());
  }
}

int cmd_probe_run(const ProbeArgs& a) {
  Config cfg = load_config(a.common);
  if (!a.levels.empty()) {
    // Level specs are NAME=PATH or NAME=TRAIN,TEST; make their paths absolute.
    std::vector<std::string> specs;
    for (const auto& spec : a.levels) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--level expects NAME=PATH[,TEST_PATH]");
      std::string paths = spec.substr(eq + 1), resolved;
      std::stringstream ss(paths);
      std::string item;
      while (std::getline(ss, item, ',')) resolved += (resolved.empty() ? "" : ",") + fs::absolute(item).string();
      specs.push_back(spec.substr(0, eq) + "=" + resolved);
    }
    cfg.set("probe.levels", specs);
  }
  override_path(cfg, "probe.manifests", a.manifests);
  override_value(cfg, "probe.model", a.model);
  override_value(cfg, "probe.category", a.category);
  override_value(cfg, "probe.shots", a.shots);
  override_value(cfg, "probe.lr_range", a.lr_range);
  override_value(cfg, "probe.wd_range", a.wd_range);
  override_value(cfg, "probe.seeds", a.seeds);
  override_value(cfg, "probe.trials", a.trials);
  override_value(cfg, "probe.epochs", a.epochs);
  override_value(cfg, "probe.batch_size", a.batch_size);
  override_value(cfg, "probe.momentum", a.momentum);
  override_value(cfg, "probe.val_fraction", a.val_fraction);
  if (a.no_normalize) cfg.set("probe.normalize", false);

  const ProbeConfig pcfg = probe_config(cfg);
  const std::uint64_t seed = global_seed(cfg);
  const bool normalize = cfg.get_bool("probe.normalize").value_or(true);
  const auto model = cfg.get_string("probe.model").value_or("model");
  const auto category = cfg.get_string("probe.category").value_or("uncategorized");
  const auto manifests_path = optional_path(cfg, "probe.manifests");
  const auto level_specs = string_list(cfg, "probe.levels");
  if (level_specs.empty()) throw Error(ErrorCode::InvalidArgument, "no levels given (--level NAME=PATH)");

  std::vector<LevelManifest> manifests;
  std::string manifest_levels_hash;
  if (manifests_path) manifests = manifests_from_json(ordered_json::parse(read_file(*manifests_path)), &manifest_levels_hash);

  ordered_json effective;
  effective["command"] = "probe run";
  effective["model"] = model;
  effective["normalize"] = normalize;
  effective["manifests"] = manifests_path ? file_fingerprint(*manifests_path) : "";

  std::vector<LevelData> levels;
  ordered_json level_defs = ordered_json::array();
  for (const auto& spec : level_specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw Error(ErrorCode::InvalidArgument, "bad level spec '" + spec + "'");
    const std::string name = spec.substr(0, eq);
    if (name.find_first_of(",\n\"") != std::string::npos) throw Error(ErrorCode::InvalidArgument, "bad level name '" + name + "'");
    std::vector<fs::path> paths;
    std::stringstream ss(spec.substr(eq + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      fs::path p(item);
      if (p.is_relative() && a.levels.empty() && a.common.config_path) p = fs::path(*a.common.config_path).parent_path() / p;
      paths.push_back(p);
    }
    LevelData level;
    level.name = name;
    ordered_json def;
    def["name"] = name;
    if (paths.size() == 1) {
      if (!manifests_path) throw Error(ErrorCode::InvalidArgument, "level '" + name + "' has one file but no --manifests");
      if (levels.size() >= manifests.size()) {
        throw Error(ErrorCode::InvalidArgument, "more levels than manifests in " + manifests_path->string());
      }
      auto split = split_by_manifest(load_cogf(paths[0]), manifests[levels.size()]);
      level.train = std::move(split.train);
      level.test = std::move(split.test);
      effective["features"].push_back(file_fingerprint(paths[0]));
    } else if (paths.size() == 2) {
      level.train = load_cogf(paths[0]);
      level.test = load_cogf(paths[1]);
      const auto classes = std::max(level.train.num_classes(), level.test.num_classes());
      level.train.concepts = level.test.concepts = numbered_concepts(classes);
      effective["features"].push_back({file_fingerprint(paths[0]), file_fingerprint(paths[1])});
    } else {
      throw Error(ErrorCode::InvalidArgument, "bad level spec '" + spec + "'");
    }
    def["concepts"] = level.test.concepts;
    if (level.test.has_image_ids()) {
      def["test_ids"] = level.test.image_ids;
    } else {
      def["test_labels"] = level.test.labels;
    }
    level_defs.push_back(std::move(def));
    levels.push_back(std::move(level));
  }

  std::vector<std::size_t> zero_rows;
  if (normalize) {
    for (auto& level : levels) {
      zero_rows.push_back(l2_normalize_in_place(level.train) + l2_normalize_in_place(level.test));
      if (zero_rows.back() > 0) spdlog::warn("level {}: {} all-zero feature rows left unnormalized", level.name, zero_rows.back());
    }
  }

  const auto& shots_json = cfg.find("probe.shots");
  effective["probe"] = {pcfg.batch_size, pcfg.momentum, pcfg.epochs, pcfg.trials, pcfg.val_fraction, pcfg.seeds,
                        pcfg.lr_min, pcfg.lr_max, pcfg.wd_min, pcfg.wd_max, pcfg.divergence_loss};
  effective["shots"] = shots_json ? *shots_json : nlohmann::json("default");
  effective["seed"] = seed;
  effective["tool_version"] = kToolVersion;

  ResultsMeta meta;
  meta.model = model;
  meta.category = category;
  meta.levels_hash = manifests_path ? manifest_levels_hash : json_fingerprint(level_defs);
  meta.provenance = {json_fingerprint(effective), seed, kToolVersion};
  meta.zero_rows_per_level = zero_rows;

  const auto result = run_protocol(levels, pcfg, seed, a.common.jobs);

  const fs::path out = output_dir(cfg);
  write_json(out / "results.json", results_to_json(result, pcfg, meta));
  write_text(out / "results.csv", results_to_csv(result));
  std::string timing = "level,shots,seed,seconds\n";
  for (const auto& u : result.units) {
    timing += fmt::format("{},{},{},{:.3f}\n", result.level_names[u.level], shots_label(u.shots), u.seed_index, u.seconds);
  }
  write_text(out / "timing.csv", timing);

  std::cout << fmt::format("{:<12} {:>6} {:>10} {:>10} {:>8}\n", "level", "shots", "mean_top1", "std_top1", "ok");
  for (const auto& agg : result.aggregates) {
    std::cout << fmt::format("{:<12} {:>6} {:>10.4f} {:>10.4f} {:>5}/{}\n", result.level_names[agg.level],
                             shots_label(agg.shots), agg.mean_top1, agg.std_top1, agg.ok_seeds,
                             agg.ok_seeds + agg.failed_seeds);
  }
  if (result.failed_units() > 0) {
    spdlog::error("{} of {} units failed{}", result.failed_units(), result.units.size(),
                  result.any_cell_failed() ? "; some (level, shots) cells have no successful seed" : "");
    return kExitPartialFailure;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// cog report

struct ReportArgs {
  Common common;
  std::vector<std::string> results;
  std::optional<std::string> baseline;
};

int cmd_report(const ReportArgs& a) {
  Config cfg = load_config(a.common);
  if (!a.results.empty()) {
    std::vector<std::string> abs;
    for (const auto& r : a.results) abs.push_back(fs::absolute(r).string());
    cfg.set("report.results", abs);
  }
  override_value(cfg, "report.baseline", a.baseline);
  const auto files = string_list(cfg, "report.results");
  if (files.empty()) throw Error(ErrorCode::InvalidArgument, "no results files given (--results)");
  std::vector<ModelResults> models;
  for (const auto& f : files) {
    fs::path p(f);
    if (p.is_relative() && a.results.empty() && a.common.config_path) p = fs::path(*a.common.config_path).parent_path() / p;
    if (!fs::exists(p)) throw Error(ErrorCode::Io, "no such results file: " + p.string());
    try {
      models.push_back(parse_results(ordered_json::parse(read_file(p))));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::SchemaMismatch, p.string() + ": " + e.what());
    }
  }
  const auto report = build_report(models, cfg.get_string("report.baseline"));
  for (const auto& p : write_report(report, output_dir(cfg))) std::cout << "wrote " << p.string() << "\n";
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"cog: concept-generalization benchmark levels and linear-probe evaluation"};
  app.require_subcommand(1);
  std::function<int()> action;

  TaxonomyArgs tax;
  auto* taxonomy = app.add_subcommand("taxonomy", "taxonomy tools");
  taxonomy->require_subcommand(1);
  auto* validate = taxonomy->add_subcommand("validate", "parse and validate an edge list (+ metadata)");
  add_common(validate, tax.common);
  validate->add_option("--edges", tax.edges, "child<TAB>parent TSV");
  validate->add_option("--meta", tax.meta, "id<TAB>image_count<TAB>name<TAB>description TSV");
  validate->callback([&] { action = [&] { return cmd_taxonomy_validate(tax); }; });

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("sim", "semantic similarity of a pair, or of a concept to a seen set");
  add_common(sim_cmd, sim.common);
  sim_cmd->add_option("--edges", sim.edges, "child<TAB>parent TSV");
  sim_cmd->add_option("--measure", sim.measure, "lin|wup|jc|path|external");
  sim_cmd->add_option("--pair", sim.pair, "two concept ids")->expected(2);
  sim_cmd->add_option("--seen-file", sim.seen_file, "seen concept ids, one per line");
  sim_cmd->add_option("--concept", sim.concept_id, "concept to score against the seen set");
  sim_cmd->add_option("--scores", sim.scores, "external concept<TAB>score table");
  sim_cmd->callback([&] { action = [&] { return cmd_sim(sim); }; });

  LevelsArgs lv;
  auto* levels = app.add_subcommand("levels", "benchmark level construction");
  levels->require_subcommand(1);
  auto* build = levels->add_subcommand("build", "filter, rank and split unseen concepts; sample image manifests");
  add_common(build, lv.common);
  build->add_option("--edges", lv.edges, "child<TAB>parent TSV");
  build->add_option("--meta", lv.meta, "concept metadata TSV");
  build->add_option("--seen-file", lv.seen_file, "seen concept ids, one per line");
  build->add_option("--images", lv.images, "concept_id<TAB>image_id TSV");
  build->add_option("--banned", lv.banned, "banned subtree root (repeatable)");
  build->add_option("--banned-file", lv.banned_file, "banned subtree roots, one per line");
  build->add_option("--exclusions", lv.exclusions, "manually excluded concept ids, one per line");
  build->add_option("--min-images", lv.min_images, "minimum image count (default 782)");
  build->add_option("--measure", lv.measure, "lin|wup|jc|path|external (default lin)");
  build->add_option("--scores", lv.scores, "external concept<TAB>score table");
  build->add_option("--rerank", lv.rerank, "levels.json whose concepts are re-ranked by --scores");
  build->add_option("-K,--levels", lv.k, "number of levels (default 5)");
  build->add_option("-S,--level-size", lv.s, "concepts per level (default 1000)");
  build->add_option("--train-cap", lv.train_cap, "max training images per concept (default 1300)");
  build->add_option("--test-size", lv.test_size, "test images per concept (default 50)");
  build->callback([&] { action = [&] { return cmd_levels_build(lv); }; });

  PackArgs pack;
  auto* features = app.add_subcommand("features", "feature table tools");
  features->require_subcommand(1);
  auto* pack_cmd = features->add_subcommand("pack", "convert id<TAB>label<TAB>floats TSV to COGF");
  pack_cmd->add_option("--input", pack.input, "TSV input")->required();
  pack_cmd->add_option("--output", pack.output, "COGF output")->required();
  pack_cmd->callback([&] { action = [&] { return cmd_features_pack(pack); }; });

  ProbeArgs pr;
  auto* probe = app.add_subcommand("probe", "linear-probe evaluation");
  probe->require_subcommand(1);
  auto* run_cmd = probe->add_subcommand("run", "hyper-parameter search + retrain + test, per level/shots/seed");
  add_common(run_cmd, pr.common);
  run_cmd->add_option("--level", pr.levels, "NAME=FEATURES.cogf (with --manifests) or NAME=TRAIN.cogf,TEST.cogf");
  run_cmd->add_option("--manifests", pr.manifests, "manifests.json from `levels build`");
  run_cmd->add_option("--model", pr.model, "model id recorded in the results");
  run_cmd->add_option("--category", pr.category, "model category for relative plots");
  run_cmd->add_option("--shots", pr.shots, "comma list of shot counts and/or 'all'");
  run_cmd->add_option("--seeds", pr.seeds, "repetitions (default 5)");
  run_cmd->add_option("--trials", pr.trials, "hyper-parameter samples (default 30)");
  run_cmd->add_option("--epochs", pr.epochs, "SGD epochs (default 100)");
  run_cmd->add_option("--batch-size", pr.batch_size, "mini-batch size (default 1024)");
  run_cmd->add_option("--momentum", pr.momentum, "SGD momentum (default 0.9)");
  run_cmd->add_option("--val-fraction", pr.val_fraction, "validation hold-out (default 0.2)");
  run_cmd->add_option("--lr-range", pr.lr_range, "LOW:HIGH (default 1e-4:10)");
  run_cmd->add_option("--wd-range", pr.wd_range, "LOW:HIGH (default 1e-8:1e-2)");
  run_cmd->add_flag("--no-normalize", pr.no_normalize, "skip L2 row normalization");
  run_cmd->callback([&] { action = [&] { return cmd_probe_run(pr); }; });

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "merge results and emit tables + plot data");
  add_common(report, rep.common);
  report->add_option("--results", rep.results, "results.json files");
  report->add_option("--baseline", rep.baseline, "model id for relative deltas");
  report->callback([&] { action = [&] { return cmd_report(rep); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInputError;
  }
  try {
    return action ? action() : kExitInputError;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return kExitInputError;
  } catch (const nlohmann::json::exception& e) {
    spdlog::error("malformed JSON input: {}", e.what());
    return kExitInputError;
  } catch (const fs::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return kExitInputError;
  }
}

}  // namespace cog::cli
