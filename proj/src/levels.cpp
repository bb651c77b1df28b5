#include "cog/levels.hpp"

#include <algorithm>
#include <istream>

#include <spdlog/spdlog.h>

#include "cog/error.hpp"
#include "cog/parallel.hpp"
#include "cog/rng.hpp"
#include "text.hpp"

namespace cog {

std::vector<NodeIndex> filter_eligible(const Taxonomy& t, const MetaMap& meta, const FilterRules& rules,
                                       FilterStats* stats) {
  const std::size_t n = t.size();
  std::vector<char> alive(n, 1);
  FilterStats local;

  auto drop = [&](NodeIndex node, std::size_t& counter) {
    if (alive[node]) {
      alive[node] = 0;
      ++counter;
    }
  };

  std::vector<NodeIndex> seen;
  for (const auto& id : rules.seen) {
    const auto node = t.find(id);
    if (!node) throw Error(ErrorCode::SeenNotInTaxonomy, "seen concept '" + id + "' is not in the taxonomy");
    seen.push_back(*node);
  }
  std::vector<NodeIndex> banned;
  for (const auto& id : rules.banned_subtree_roots) {
    const auto node = t.find(id);
    if (!node) throw Error(ErrorCode::BannedRootNotInTaxonomy, "banned subtree root '" + id + "' is not in the taxonomy");
    banned.push_back(*node);
  }

  // (a) seen
  for (NodeIndex s : seen) drop(s, local.seen);
  // (b) ancestors of seen
  for (NodeIndex s : seen) {
    for (NodeIndex a : t.ancestors(s)) drop(a, local.seen_ancestors);
  }
  // (c) banned subtrees, roots included
  std::vector<NodeIndex> stack(banned.begin(), banned.end());
  std::vector<char> visited(n, 0);
  while (!stack.empty()) {
    const NodeIndex cur = stack.back();
    stack.pop_back();
    if (visited[cur]) continue;
    visited[cur] = 1;
    drop(cur, local.banned_subtrees);
    for (NodeIndex c : t.children(cur)) stack.push_back(c);
  }
  // (d) image count
  for (NodeIndex node = 0; node < n; ++node) {
    if (alive[node] && image_count(meta, t.id(node)) < rules.min_image_count) drop(node, local.too_few_images);
  }
  // (e) leaf-only among survivors: mark every ancestor of a survivor first,
  // then drop, so removal order cannot matter.
  std::vector<char> has_alive_descendant(n, 0);
  for (NodeIndex node = 0; node < n; ++node) {
    if (!alive[node]) continue;
    for (NodeIndex a : t.ancestors(node)) has_alive_descendant[a] = 1;
  }
  for (NodeIndex node = 0; node < n; ++node) {
    if (has_alive_descendant[node]) drop(node, local.non_leaf);
  }
  // (f) manual exclusions
  for (const auto& id : rules.manual_exclusions) {
    if (const auto node = t.find(id)) {
      drop(*node, local.manual);
    } else {
      spdlog::debug("manual exclusion '{}' is not in the taxonomy; ignored", id);
    }
  }

  std::vector<NodeIndex> out;
  for (NodeIndex node = 0; node < n; ++node) {
    if (alive[node]) out.push_back(node);
  }
  if (stats) *stats = local;
  return out;
}

void sort_ranked(std::vector<RankedEntry>& entries) {
  std::sort(entries.begin(), entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.id < b.id;
  });
}

RankedList rank_unseen(const Taxonomy& t, const SeenScorer& scorer, std::span<const NodeIndex> eligible,
                       unsigned jobs) {
  RankedList ranked;
  ranked.entries.resize(eligible.size());
  parallel_for(eligible.size(), jobs, [&](std::size_t i) {
    ranked.entries[i] = {t.id(eligible[i]), scorer.score(eligible[i])};
  });
  sort_ranked(ranked.entries);
  return ranked;
}

std::vector<std::size_t> gap_sizes(std::size_t discards, std::size_t k) {
  if (k <= 1) return {};
  const std::size_t slots = k - 1;
  std::vector<std::size_t> gaps(slots, discards / slots);
  const std::size_t remainder = discards % slots;
  for (std::size_t i = slots - remainder; i < slots; ++i) ++gaps[i];
  return gaps;
}

LevelSet build_levels(const RankedList& ranked, std::size_t k, std::size_t s) {
  if (k == 0 || s == 0) throw Error(ErrorCode::InvalidArgument, "K and S must both be at least 1");
  if (ranked.size() < k * s) {
    throw Error(ErrorCode::NotEnoughConcepts, "ranked list has " + std::to_string(ranked.size()) +
                                                  " concepts but K*S = " + std::to_string(k * s));
  }
  LevelSet out;
  out.k = k;
  out.s = s;
  const std::size_t discards = ranked.size() - k * s;
  out.gaps = gap_sizes(discards, k);

  std::size_t pos = 0;
  for (std::size_t level = 0; level < k; ++level) {
    auto& dst = out.levels.emplace_back();
    for (std::size_t i = 0; i < s; ++i) dst.push_back(ranked.entries[pos++].id);
    if (level + 1 < k) {
      for (std::size_t i = 0; i < out.gaps[level]; ++i) out.discarded.push_back(ranked.entries[pos++].id);
    }
  }
  while (pos < ranked.size()) out.discarded.push_back(ranked.entries[pos++].id);
  return out;
}

RankedList rerank_level_concepts(const Taxonomy& t, const LevelSet& levels, const SeenScorer& scorer,
                                 unsigned jobs) {
  std::vector<NodeIndex> nodes;
  for (const auto& level : levels.levels) {
    for (const auto& id : level) nodes.push_back(t.index_of(id));
  }
  std::sort(nodes.begin(), nodes.end());
  return rank_unseen(t, scorer, nodes, jobs);
}

SplitManifestEntry sample_split(std::vector<std::string> images, std::size_t train_cap, std::size_t test_size,
                                std::uint64_t seed) {
  std::sort(images.begin(), images.end());
  images.erase(std::unique(images.begin(), images.end()), images.end());
  if (images.size() < test_size + 1) {
    throw Error(ErrorCode::TooFewImages, std::to_string(images.size()) + " images, need at least " +
                                             std::to_string(test_size + 1));
  }
  Rng rng(seed);
  rng.shuffle(images);
  SplitManifestEntry entry;
  entry.test.assign(images.begin(), images.begin() + static_cast<std::ptrdiff_t>(test_size));
  const std::size_t train_n = std::min(train_cap, images.size() - test_size);
  const auto train_begin = images.begin() + static_cast<std::ptrdiff_t>(test_size);
  entry.train.assign(train_begin, train_begin + static_cast<std::ptrdiff_t>(train_n));
  std::sort(entry.test.begin(), entry.test.end());
  std::sort(entry.train.begin(), entry.train.end());
  return entry;
}

ImageLists read_image_list(std::istream& in) {
  ImageLists lists;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = text::chomp(line);
    if (text::skippable(view)) continue;
    const auto fields = text::split(view, '\t');
    if (fields.size() != 2 || !is_valid_concept_id(fields[0]) || fields[1].empty()) {
      throw Error(ErrorCode::MalformedLine,
                  "line " + std::to_string(line_no) + ": expected 'concept_id<TAB>image_id'");
    }
    lists[std::string(fields[0])].emplace_back(fields[1]);
  }
  for (auto& [concept_id, ids] : lists) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  }
  return lists;
}

std::vector<LevelManifest> build_manifests(const LevelSet& levels, const ImageLists& images, std::size_t train_cap,
                                           std::size_t test_size, std::uint64_t global_seed, unsigned jobs) {
  std::vector<LevelManifest> out(levels.levels.size());
  std::vector<std::pair<std::size_t, std::size_t>> work;
  for (std::size_t l = 0; l < levels.levels.size(); ++l) {
    out[l].resize(levels.levels[l].size());
    for (std::size_t i = 0; i < levels.levels[l].size(); ++i) work.emplace_back(l, i);
  }
  parallel_for(work.size(), jobs, [&](std::size_t w) {
    const auto [l, i] = work[w];
    const auto& concept_id = levels.levels[l][i];
    const auto it = images.find(concept_id);
    std::vector<std::string> ids = it == images.end() ? std::vector<std::string>{} : it->second;
    try {
      out[l][i] = {concept_id, sample_split(std::move(ids), train_cap, test_size, derive_seed(global_seed, concept_id))};
    } catch (const Error& e) {
      throw Error(e.code(), "concept '" + concept_id + "': " + e.what());
    }
  });
  return out;
}

}  // namespace cog
