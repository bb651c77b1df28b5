#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cog {

using ConceptId = std::string;

/// Dense node handle. Indices follow lexicographic ConceptId order, so
/// "smallest id" tie-breaks reduce to "smallest index".
using NodeIndex = std::uint32_t;

struct Edge {
  ConceptId child;
  ConceptId parent;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct ConceptMeta {
  ConceptId id;
  std::string name;
  std::string description;
  std::uint64_t image_count = 0;
};

using MetaMap = std::map<ConceptId, ConceptMeta, std::less<>>;

/// True if `id` is a valid concept token: nonempty, no whitespace.
bool is_valid_concept_id(std::string_view id);

/// Immutable is-a DAG with a single root. Edges point child -> parent.
class Taxonomy {
 public:
  /// Validates and builds. Duplicate edges are collapsed.
  /// Throws CycleDetected, MultipleRoots, EmptyTaxonomy, MalformedLine.
  static Taxonomy from_edges(std::span<const Edge> edges);

  std::size_t size() const { return ids_.size(); }
  NodeIndex root() const { return root_; }

  const ConceptId& id(NodeIndex n) const { return ids_[n]; }
  std::span<const ConceptId> ids() const { return ids_; }

  std::optional<NodeIndex> find(std::string_view id) const;
  /// Throws UnknownConcept.
  NodeIndex index_of(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id).has_value(); }

  std::span<const NodeIndex> parents(NodeIndex n) const;
  std::span<const NodeIndex> children(NodeIndex n) const;
  bool is_leaf(NodeIndex n) const { return children(n).empty(); }

  /// Transitive parents of `n`, excluding `n`, sorted ascending.
  std::vector<NodeIndex> ancestors(NodeIndex n) const;
  std::vector<ConceptId> ancestors(std::string_view id) const;

  /// Distinct nodes reachable from `n` through child edges, `n` included.
  std::size_t descendant_count(NodeIndex n) const { return descendant_counts_[n]; }
  std::size_t descendant_count(std::string_view id) const { return descendant_count(index_of(id)); }

  /// Shortest number of parent hops to the root, plus one. depth(root) == 1.
  std::size_t depth(NodeIndex n) const { return depths_[n]; }

  /// Nodes in an order where every parent precedes its children.
  std::span<const NodeIndex> topological_order() const { return topo_; }

  /// All edges, sorted.
  std::vector<Edge> edges() const;

 private:
  Taxonomy() = default;

  std::vector<ConceptId> ids_;
  std::vector<std::uint32_t> parent_offsets_;
  std::vector<NodeIndex> parent_list_;
  std::vector<std::uint32_t> child_offsets_;
  std::vector<NodeIndex> child_list_;
  std::vector<std::size_t> descendant_counts_;
  std::vector<std::size_t> depths_;
  std::vector<NodeIndex> topo_;
  NodeIndex root_ = 0;
};

/// Reads `child<TAB>parent` lines. Blank lines and `#` comments are skipped.
/// Throws MalformedLine with the 1-based line number.
std::vector<Edge> read_edges(std::istream& in);

/// Reads `id<TAB>image_count<TAB>name[<TAB>description...]` lines. The
/// description is the remainder of the line after the third tab.
/// Throws MalformedLine, or UnknownConceptInMeta when `taxonomy` lacks an id.
MetaMap read_meta(std::istream& in, const Taxonomy& taxonomy);

/// Writes edges in the same TSV form read_edges accepts.
void write_edges(std::ostream& out, std::span<const Edge> edges);

/// Absent metadata counts as zero images.
std::uint64_t image_count(const MetaMap& meta, std::string_view id);

}  // namespace cog
