#include "cog/taxonomy.hpp"

#include <algorithm>
#include <deque>
#include <istream>
#include <ostream>

#include "cog/error.hpp"
#include "text.hpp"

namespace cog {

bool is_valid_concept_id(std::string_view id) {
  return !id.empty() && std::none_of(id.begin(), id.end(), [](unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
  });
}

namespace {

// Compressed adjacency: offsets has size+1 entries.
void build_csr(std::size_t n, const std::vector<std::pair<NodeIndex, NodeIndex>>& pairs,
               std::vector<std::uint32_t>& offsets, std::vector<NodeIndex>& list) {
  offsets.assign(n + 1, 0);
  for (const auto& [from, to] : pairs) ++offsets[from + 1];
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  list.assign(pairs.size(), 0);
  auto cursor = offsets;
  for (const auto& [from, to] : pairs) list[cursor[from]++] = to;
  for (std::size_t i = 0; i < n; ++i) std::sort(list.begin() + offsets[i], list.begin() + offsets[i + 1]);
}

}  // namespace

Taxonomy Taxonomy::from_edges(std::span<const Edge> edges) {
  Taxonomy t;
  for (const auto& e : edges) {
    if (!is_valid_concept_id(e.child) || !is_valid_concept_id(e.parent)) {
      throw Error(ErrorCode::MalformedLine, "invalid concept id in edge '" + e.child + "' -> '" + e.parent + "'");
    }
    if (e.child == e.parent) {
      throw Error(ErrorCode::CycleDetected, "self loop " + e.child + " -> " + e.parent);
    }
    t.ids_.push_back(e.child);
    t.ids_.push_back(e.parent);
  }
  if (t.ids_.empty()) throw Error(ErrorCode::EmptyTaxonomy, "no edges");
  std::sort(t.ids_.begin(), t.ids_.end());
  t.ids_.erase(std::unique(t.ids_.begin(), t.ids_.end()), t.ids_.end());

  const std::size_t n = t.ids_.size();
  std::vector<std::pair<NodeIndex, NodeIndex>> up;
  up.reserve(edges.size());
  for (const auto& e : edges) up.emplace_back(*t.find(e.child), *t.find(e.parent));
  std::sort(up.begin(), up.end());
  up.erase(std::unique(up.begin(), up.end()), up.end());

  std::vector<std::pair<NodeIndex, NodeIndex>> down;
  down.reserve(up.size());
  for (const auto& [c, p] : up) down.emplace_back(p, c);
  build_csr(n, up, t.parent_offsets_, t.parent_list_);
  build_csr(n, down, t.child_offsets_, t.child_list_);

  // Kahn's algorithm from parentless nodes downwards.
  std::vector<std::uint32_t> pending(n);
  std::deque<NodeIndex> queue;
  std::vector<NodeIndex> roots;
  for (NodeIndex i = 0; i < n; ++i) {
    pending[i] = static_cast<std::uint32_t>(t.parents(i).size());
    if (pending[i] == 0) {
      queue.push_back(i);
      roots.push_back(i);
    }
  }
  while (!queue.empty()) {
    const NodeIndex cur = queue.front();
    queue.pop_front();
    t.topo_.push_back(cur);
    for (NodeIndex c : t.children(cur)) {
      if (--pending[c] == 0) queue.push_back(c);
    }
  }
  if (t.topo_.size() != n) {
    // Every unprocessed node keeps an unprocessed parent, so walking those
    // parents must revisit a node.
    NodeIndex cur = 0;
    while (pending[cur] == 0) ++cur;
    std::vector<char> seen(n, 0);
    while (!seen[cur]) {
      seen[cur] = 1;
      const auto ps = t.parents(cur);
      cur = *std::find_if(ps.begin(), ps.end(), [&](NodeIndex p) { return pending[p] != 0; });
    }
    const auto ps = t.parents(cur);
    const NodeIndex next = *std::find_if(ps.begin(), ps.end(), [&](NodeIndex p) { return pending[p] != 0; });
    throw Error(ErrorCode::CycleDetected, "cycle through edge " + t.ids_[cur] + " -> " + t.ids_[next]);
  }
  if (roots.size() != 1) {
    std::string names;
    for (NodeIndex r : roots) names += (names.empty() ? "" : ", ") + t.ids_[r];
    throw Error(ErrorCode::MultipleRoots, "parentless nodes: " + names);
  }
  t.root_ = roots.front();

  t.depths_.assign(n, 0);
  t.depths_[t.root_] = 1;
  std::deque<NodeIndex> bfs{t.root_};
  while (!bfs.empty()) {
    const NodeIndex cur = bfs.front();
    bfs.pop_front();
    for (NodeIndex c : t.children(cur)) {
      if (t.depths_[c] == 0) {
        t.depths_[c] = t.depths_[cur] + 1;
        bfs.push_back(c);
      }
    }
  }

  // Distinct-descendant counting with a visit stamp per source node.
  t.descendant_counts_.assign(n, 0);
  std::vector<NodeIndex> stamp(n, static_cast<NodeIndex>(-1));
  std::vector<NodeIndex> stack;
  for (NodeIndex s = 0; s < n; ++s) {
    std::size_t count = 0;
    stack.assign(1, s);
    stamp[s] = s;
    while (!stack.empty()) {
      const NodeIndex cur = stack.back();
      stack.pop_back();
      ++count;
      for (NodeIndex c : t.children(cur)) {
        if (stamp[c] != s) {
          stamp[c] = s;
          stack.push_back(c);
        }
      }
    }
    t.descendant_counts_[s] = count;
  }
  return t;
}

std::optional<NodeIndex> Taxonomy::find(std::string_view id) const {
  const auto it = std::lower_bound(ids_.begin(), ids_.end(), id,
                                   [](const ConceptId& a, std::string_view b) { return a < b; });
  if (it == ids_.end() || *it != id) return std::nullopt;
  return static_cast<NodeIndex>(it - ids_.begin());
}

NodeIndex Taxonomy::index_of(std::string_view id) const {
  if (auto n = find(id)) return *n;
  throw Error(ErrorCode::UnknownConcept, "'" + std::string(id) + "' is not in the taxonomy");
}

std::span<const NodeIndex> Taxonomy::parents(NodeIndex n) const {
  return {parent_list_.data() + parent_offsets_[n], parent_list_.data() + parent_offsets_[n + 1]};
}

std::span<const NodeIndex> Taxonomy::children(NodeIndex n) const {
  return {child_list_.data() + child_offsets_[n], child_list_.data() + child_offsets_[n + 1]};
}

std::vector<NodeIndex> Taxonomy::ancestors(NodeIndex n) const {
  std::vector<NodeIndex> out;
  std::vector<NodeIndex> stack(parents(n).begin(), parents(n).end());
  while (!stack.empty()) {
    const NodeIndex cur = stack.back();
    stack.pop_back();
    if (std::find(out.begin(), out.end(), cur) != out.end()) continue;
    out.push_back(cur);
    for (NodeIndex p : parents(cur)) stack.push_back(p);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ConceptId> Taxonomy::ancestors(std::string_view id) const {
  std::vector<ConceptId> out;
  for (NodeIndex a : ancestors(index_of(id))) out.push_back(ids_[a]);
  return out;
}

std::vector<Edge> Taxonomy::edges() const {
  std::vector<Edge> out;
  out.reserve(parent_list_.size());
  for (NodeIndex c = 0; c < size(); ++c) {
    for (NodeIndex p : parents(c)) out.push_back({ids_[c], ids_[p]});
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Edge> read_edges(std::istream& in) {
  std::vector<Edge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = text::chomp(line);
    if (text::skippable(view)) continue;
    const auto fields = text::split(view, '\t');
    if (fields.size() != 2 || !is_valid_concept_id(fields[0]) || !is_valid_concept_id(fields[1])) {
      throw Error(ErrorCode::MalformedLine,
                  "line " + std::to_string(line_no) + ": expected 'child<TAB>parent', got '" + std::string(view) + "'");
    }
    edges.push_back({std::string(fields[0]), std::string(fields[1])});
  }
  return edges;
}

MetaMap read_meta(std::istream& in, const Taxonomy& taxonomy) {
  MetaMap meta;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = text::chomp(line);
    if (text::skippable(view)) continue;
    const auto where = "line " + std::to_string(line_no);
    const auto t1 = view.find('\t');
    const auto t2 = t1 == std::string_view::npos ? t1 : view.find('\t', t1 + 1);
    if (t2 == std::string_view::npos) {
      throw Error(ErrorCode::MalformedLine, where + ": expected 'id<TAB>image_count<TAB>name[<TAB>description]'");
    }
    const auto t3 = view.find('\t', t2 + 1);
    const auto id = view.substr(0, t1);
    const auto count = text::parse_number<std::uint64_t>(view.substr(t1 + 1, t2 - t1 - 1));
    if (!is_valid_concept_id(id) || !count) {
      throw Error(ErrorCode::MalformedLine, where + ": bad id or image count");
    }
    if (!taxonomy.contains(id)) {
      throw Error(ErrorCode::UnknownConceptInMeta, where + ": '" + std::string(id) + "' is not in the taxonomy");
    }
    ConceptMeta m;
    m.id = std::string(id);
    m.image_count = *count;
    if (t3 == std::string_view::npos) {
      m.name = std::string(view.substr(t2 + 1));
    } else {
      m.name = std::string(view.substr(t2 + 1, t3 - t2 - 1));
      m.description = std::string(view.substr(t3 + 1));
    }
    if (!meta.emplace(m.id, m).second) {
      throw Error(ErrorCode::MalformedLine, where + ": duplicate metadata for '" + m.id + "'");
    }
  }
  return meta;
}

void write_edges(std::ostream& out, std::span<const Edge> edges) {
  for (const auto& e : edges) out << e.child << '\t' << e.parent << '\n';
}

std::uint64_t image_count(const MetaMap& meta, std::string_view id) {
  const auto it = meta.find(id);
  return it == meta.end() ? 0 : it->second.image_count;
}

}  // namespace cog
