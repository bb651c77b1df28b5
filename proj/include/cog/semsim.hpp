#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "cog/taxonomy.hpp"

namespace cog {

/// Information content per node, in nats: ic = -ln(descendant_count / total).
struct IcTable {
  std::vector<double> ic;
  std::size_t total = 0;

  double operator[](NodeIndex n) const { return ic[n]; }
};

IcTable build_ic_table(const Taxonomy& t);

/// Common subsumer (ancestor-or-self of both) with maximum IC; ties go to
/// the lexicographically smallest id. lcs(c, c) == c.
NodeIndex lcs(const Taxonomy& t, const IcTable& ic, NodeIndex c1, NodeIndex c2);

/// 2 * lcs_ic / (ic(c1) + ic(c2)). A zero denominator (both concepts at the
/// root) yields 1 when c1 == c2 and 0 otherwise.
double lin_similarity(const IcTable& ic, double lcs_ic, NodeIndex c1, NodeIndex c2);

/// 1 / (1 + ic(c1) + ic(c2) - 2 * lcs_ic).
double jiang_conrath(const IcTable& ic, double lcs_ic, NodeIndex c1, NodeIndex c2);

/// 2 * depth(lcs) / (depth(c1) + depth(c2)) with the subsumer chosen by
/// maximum depth. Identity is 1 and the value is capped at 1: in a DAG a
/// subsumer reached by a long path can be deeper than a node's shortest depth.
double wu_palmer(const Taxonomy& t, NodeIndex c1, NodeIndex c2);

/// 1 / (1 + shortest c1 -> subsumer -> c2 hop count).
double path_similarity(const Taxonomy& t, NodeIndex c1, NodeIndex c2);

enum class MeasureKind { Lin, WuPalmer, JiangConrath, Path, External };

std::optional<MeasureKind> parse_measure(std::string_view name);
std::string_view to_string(MeasureKind kind);

/// Pairwise measure over a fixed taxonomy with per-node subsumer tables
/// precomputed, so repeated queries cost one sorted-list merge each.
/// Read-only after construction; safe to share across threads.
class PairwiseMeasure {
 public:
  /// `kind` must not be External (that variant has no pairwise form).
  PairwiseMeasure(const Taxonomy& t, MeasureKind kind);

  MeasureKind kind() const { return kind_; }
  const Taxonomy& taxonomy() const { return *taxonomy_; }
  const IcTable& ic() const { return ic_; }

  double operator()(NodeIndex c1, NodeIndex c2) const;
  double operator()(std::string_view c1, std::string_view c2) const;

  /// IC-maximizing subsumer, identical to the free lcs().
  NodeIndex lcs(NodeIndex c1, NodeIndex c2) const;

 private:
  struct Subsumer {
    NodeIndex node;
    std::uint32_t hops;  // shortest upward distance
  };

  std::span<const Subsumer> subsumers(NodeIndex n) const;

  const Taxonomy* taxonomy_;
  MeasureKind kind_;
  IcTable ic_;
  std::vector<std::uint32_t> offsets_;
  std::vector<Subsumer> table_;  // ancestors-or-self, sorted by node
};

/// Similarity of a candidate concept to a fixed seen set.
class SeenScorer {
 public:
  virtual ~SeenScorer() = default;
  virtual double score(NodeIndex c) const = 0;
};

/// Max over the seen set of a pairwise measure.
class SeenSetSimilarity final : public SeenScorer {
 public:
  /// Throws EmptySeenSet.
  SeenSetSimilarity(const PairwiseMeasure& measure, std::vector<NodeIndex> seen);

  /// Throws ConceptInSeenSet when c is itself seen.
  double score(NodeIndex c) const override;

 private:
  const PairwiseMeasure* measure_;
  std::vector<NodeIndex> seen_;  // sorted
};

double set_similarity(const PairwiseMeasure& measure, std::span<const NodeIndex> seen, NodeIndex c);

/// Precomputed concept -> similarity-to-seen table read from
/// `concept_id<TAB>score` lines.
class ExternalScores final : public SeenScorer {
 public:
  /// Throws UnknownScoreId listing ids absent from `t`, or MalformedLine.
  /// Out-of-range scores are clamped to [0, 1] and counted.
  static ExternalScores read(std::istream& in, const Taxonomy& t);

  /// Throws MissingScore when c has no entry.
  double score(NodeIndex c) const override;

  bool contains(NodeIndex c) const;
  std::size_t clamped_count() const { return clamped_; }

 private:
  const Taxonomy* taxonomy_ = nullptr;
  std::vector<std::optional<double>> scores_;
  std::size_t clamped_ = 0;
};

}  // namespace cog
