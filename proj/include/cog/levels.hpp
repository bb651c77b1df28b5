#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cog/semsim.hpp"
#include "cog/taxonomy.hpp"

namespace cog {

struct FilterRules {
  std::vector<ConceptId> seen;
  std::uint64_t min_image_count = 782;
  std::vector<ConceptId> banned_subtree_roots;
  /// Ids missing from the taxonomy are ignored.
  std::vector<ConceptId> manual_exclusions;
};

/// How many nodes each rule removed, in application order (a)..(f).
struct FilterStats {
  std::size_t seen = 0;
  std::size_t seen_ancestors = 0;
  std::size_t banned_subtrees = 0;
  std::size_t too_few_images = 0;
  std::size_t non_leaf = 0;
  std::size_t manual = 0;
};

/// Applies, in order: drop seen concepts, drop ancestors of seen concepts,
/// drop banned subtrees (their roots included), drop concepts with fewer
/// than min_image_count images, drop survivors that are ancestors of other
/// survivors, drop manual exclusions. Returns the survivors sorted.
/// Throws SeenNotInTaxonomy, BannedRootNotInTaxonomy.
std::vector<NodeIndex> filter_eligible(const Taxonomy& t, const MetaMap& meta, const FilterRules& rules,
                                       FilterStats* stats = nullptr);

struct RankedEntry {
  ConceptId id;
  double similarity = 0.0;
};

/// Sorted by similarity descending, then id ascending.
struct RankedList {
  std::vector<RankedEntry> entries;

  std::size_t size() const { return entries.size(); }
};

/// Scores every eligible concept against the seen set. `jobs` only changes
/// wall-clock time, never the result.
RankedList rank_unseen(const Taxonomy& t, const SeenScorer& scorer, std::span<const NodeIndex> eligible,
                       unsigned jobs = 1);

/// Stable ordering used by RankedList.
void sort_ranked(std::vector<RankedEntry>& entries);

inline constexpr const char* kGapPolicyEven = "even-remainder-last";

struct LevelSet {
  std::size_t k = 0;
  std::size_t s = 0;
  std::string gap_policy = kGapPolicyEven;
  std::vector<std::vector<ConceptId>> levels;
  /// Ranked entries that fell into gaps (or the tail when k == 1).
  std::vector<ConceptId> discarded;
  std::vector<std::size_t> gaps;
};

/// Sizes of the k - 1 inter-level gaps for `discards` dropped entries:
/// floor(discards / (k - 1)) each, with the remainder added one apiece to
/// the last gaps. Empty when k == 1.
std::vector<std::size_t> gap_sizes(std::size_t discards, std::size_t k);

/// Cuts the ranking into k consecutive runs of s concepts separated by the
/// gaps above. Throws NotEnoughConcepts or InvalidArgument.
LevelSet build_levels(const RankedList& ranked, std::size_t k, std::size_t s);

/// Ranks the concepts already placed in `levels` by `scorer`. Feeding the
/// result back to build_levels with the same k and s gives gap-free levels.
RankedList rerank_level_concepts(const Taxonomy& t, const LevelSet& levels, const SeenScorer& scorer,
                                 unsigned jobs = 1);

struct SplitManifestEntry {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

inline constexpr std::size_t kDefaultTrainCap = 1300;
inline constexpr std::size_t kDefaultTestSize = 50;

/// Seeded uniform test sample of `test_size` ids, then up to `train_cap`
/// of the rest as train. The input order does not matter (ids are sorted
/// before sampling) and both outputs are returned sorted.
/// Throws TooFewImages when fewer than test_size + 1 ids are given.
SplitManifestEntry sample_split(std::vector<std::string> images, std::size_t train_cap, std::size_t test_size,
                                std::uint64_t seed);

using ImageLists = std::map<ConceptId, std::vector<std::string>, std::less<>>;

/// Reads `concept_id<TAB>image_id` lines. Duplicate pairs are collapsed.
ImageLists read_image_list(std::istream& in);

/// Concepts in level order with their split.
using LevelManifest = std::vector<std::pair<ConceptId, SplitManifestEntry>>;

/// Per-concept seeds are derive_seed(global_seed, concept_id).
std::vector<LevelManifest> build_manifests(const LevelSet& levels, const ImageLists& images, std::size_t train_cap,
                                           std::size_t test_size, std::uint64_t global_seed, unsigned jobs = 1);

}  // namespace cog
