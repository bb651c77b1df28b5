#include "cog/semsim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <limits>
#include <map>

#include <spdlog/spdlog.h>

#include "cog/error.hpp"
#include "text.hpp"

namespace cog {

namespace {

std::vector<NodeIndex> ancestors_or_self(const Taxonomy& t, NodeIndex n) {
  auto out = t.ancestors(n);
  out.insert(std::lower_bound(out.begin(), out.end(), n), n);
  return out;
}

std::vector<NodeIndex> common_subsumers(const Taxonomy& t, NodeIndex a, NodeIndex b) {
  const auto sa = ancestors_or_self(t, a);
  const auto sb = ancestors_or_self(t, b);
  std::vector<NodeIndex> out;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(out));
  return out;
}

// Upward BFS hop counts, indexed by node; max() marks unreachable.
std::vector<std::uint32_t> upward_hops(const Taxonomy& t, NodeIndex n) {
  std::vector<std::uint32_t> hops(t.size(), std::numeric_limits<std::uint32_t>::max());
  hops[n] = 0;
  std::deque<NodeIndex> queue{n};
  while (!queue.empty()) {
    const NodeIndex cur = queue.front();
    queue.pop_front();
    for (NodeIndex p : t.parents(cur)) {
      if (hops[p] == std::numeric_limits<std::uint32_t>::max()) {
        hops[p] = hops[cur] + 1;
        queue.push_back(p);
      }
    }
  }
  return hops;
}

double wu_palmer_from_depths(std::size_t lcs_depth, std::size_t d1, std::size_t d2) {
  return std::min(1.0, 2.0 * static_cast<double>(lcs_depth) / static_cast<double>(d1 + d2));
}

}  // namespace

IcTable build_ic_table(const Taxonomy& t) {
  IcTable table;
  table.total = t.size();
  table.ic.resize(t.size());
  const auto total = static_cast<double>(t.size());
  for (NodeIndex n = 0; n < t.size(); ++n) {
    table.ic[n] = -std::log(static_cast<double>(t.descendant_count(n)) / total);
  }
  // -log(1) is +0 but keep the root exactly zero regardless of sign.
  table.ic[t.root()] = 0.0;
  return table;
}

NodeIndex lcs(const Taxonomy& t, const IcTable& ic, NodeIndex c1, NodeIndex c2) {
  const auto common = common_subsumers(t, c1, c2);
  NodeIndex best = common.front();
  for (NodeIndex s : common) {
    if (ic[s] > ic[best]) best = s;
  }
  return best;
}

double lin_similarity(const IcTable& ic, double lcs_ic, NodeIndex c1, NodeIndex c2) {
  const double denom = ic[c1] + ic[c2];
  if (denom == 0.0) return c1 == c2 ? 1.0 : 0.0;
  return 2.0 * lcs_ic / denom;
}

double jiang_conrath(const IcTable& ic, double lcs_ic, NodeIndex c1, NodeIndex c2) {
  if (c1 == c2) return 1.0;
  const double dist = std::max(0.0, ic[c1] + ic[c2] - 2.0 * lcs_ic);
  return 1.0 / (1.0 + dist);
}

double wu_palmer(const Taxonomy& t, NodeIndex c1, NodeIndex c2) {
  if (c1 == c2) return 1.0;
  const auto common = common_subsumers(t, c1, c2);
  std::size_t best = 0;
  for (NodeIndex s : common) best = std::max(best, t.depth(s));
  return wu_palmer_from_depths(best, t.depth(c1), t.depth(c2));
}

double path_similarity(const Taxonomy& t, NodeIndex c1, NodeIndex c2) {
  const auto h1 = upward_hops(t, c1);
  const auto h2 = upward_hops(t, c2);
  std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
  for (NodeIndex s = 0; s < t.size(); ++s) {
    if (h1[s] == std::numeric_limits<std::uint32_t>::max() || h2[s] == std::numeric_limits<std::uint32_t>::max()) {
      continue;
    }
    best = std::min<std::uint64_t>(best, std::uint64_t{h1[s]} + h2[s]);
  }
  return 1.0 / (1.0 + static_cast<double>(best));
}

std::optional<MeasureKind> parse_measure(std::string_view name) {
  if (name == "lin") return MeasureKind::Lin;
  if (name == "wup") return MeasureKind::WuPalmer;
  if (name == "jc") return MeasureKind::JiangConrath;
  if (name == "path") return MeasureKind::Path;
  if (name == "external") return MeasureKind::External;
  return std::nullopt;
}

std::string_view to_string(MeasureKind kind) {
  switch (kind) {
    case MeasureKind::Lin: return "lin";
    case MeasureKind::WuPalmer: return "wup";
    case MeasureKind::JiangConrath: return "jc";
    case MeasureKind::Path: return "path";
    case MeasureKind::External: return "external";
  }
  return "unknown";
}

PairwiseMeasure::PairwiseMeasure(const Taxonomy& t, MeasureKind kind)
    : taxonomy_(&t), kind_(kind), ic_(build_ic_table(t)) {
  if (kind == MeasureKind::External) {
    throw Error(ErrorCode::InvalidArgument, "the external measure has no pairwise form; use a score table");
  }
  // Parents come first in topological order, so each node's table is the
  // merge of its parents' tables with hops + 1, plus itself.
  const std::size_t n = t.size();
  std::vector<std::vector<Subsumer>> per_node(n);
  std::map<NodeIndex, std::uint32_t> merged;
  for (NodeIndex cur : t.topological_order()) {
    merged.clear();
    merged[cur] = 0;
    for (NodeIndex p : t.parents(cur)) {
      for (const auto& s : per_node[p]) {
        auto [it, inserted] = merged.emplace(s.node, s.hops + 1);
        if (!inserted) it->second = std::min(it->second, s.hops + 1);
      }
    }
    auto& dst = per_node[cur];
    dst.reserve(merged.size());
    for (const auto& [node, hops] : merged) dst.push_back({node, hops});
  }
  offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] = offsets_[i] + static_cast<std::uint32_t>(per_node[i].size());
  table_.reserve(offsets_[n]);
  for (auto& v : per_node) table_.insert(table_.end(), v.begin(), v.end());
}

std::span<const PairwiseMeasure::Subsumer> PairwiseMeasure::subsumers(NodeIndex n) const {
  return {table_.data() + offsets_[n], table_.data() + offsets_[n + 1]};
}

NodeIndex PairwiseMeasure::lcs(NodeIndex c1, NodeIndex c2) const {
  const auto a = subsumers(c1);
  const auto b = subsumers(c2);
  std::optional<NodeIndex> best;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].node < b[j].node) {
      ++i;
    } else if (b[j].node < a[i].node) {
      ++j;
    } else {
      const NodeIndex s = a[i].node;
      if (!best || ic_[s] > ic_[*best]) best = s;
      ++i;
      ++j;
    }
  }
  // The root subsumes everything, so the merge always finds a match.
  return *best;
}

double PairwiseMeasure::operator()(NodeIndex c1, NodeIndex c2) const {
  const Taxonomy& t = *taxonomy_;
  switch (kind_) {
    case MeasureKind::Lin: return lin_similarity(ic_, ic_[lcs(c1, c2)], c1, c2);
    case MeasureKind::JiangConrath: return jiang_conrath(ic_, ic_[lcs(c1, c2)], c1, c2);
    case MeasureKind::WuPalmer:
    case MeasureKind::Path: {
      if (c1 == c2) return 1.0;
      const auto a = subsumers(c1);
      const auto b = subsumers(c2);
      std::size_t best_depth = 0;
      std::uint32_t best_hops = std::numeric_limits<std::uint32_t>::max();
      std::size_t i = 0, j = 0;
      while (i < a.size() && j < b.size()) {
        if (a[i].node < b[j].node) {
          ++i;
        } else if (b[j].node < a[i].node) {
          ++j;
        } else {
          best_depth = std::max(best_depth, t.depth(a[i].node));
          best_hops = std::min(best_hops, a[i].hops + b[j].hops);
          ++i;
          ++j;
        }
      }
      if (kind_ == MeasureKind::WuPalmer) return wu_palmer_from_depths(best_depth, t.depth(c1), t.depth(c2));
      return 1.0 / (1.0 + static_cast<double>(best_hops));
    }
    case MeasureKind::External: break;
  }
  throw Error(ErrorCode::InvalidArgument, "unsupported pairwise measure");
}

double PairwiseMeasure::operator()(std::string_view c1, std::string_view c2) const {
  return (*this)(taxonomy_->index_of(c1), taxonomy_->index_of(c2));
}

SeenSetSimilarity::SeenSetSimilarity(const PairwiseMeasure& measure, std::vector<NodeIndex> seen)
    : measure_(&measure), seen_(std::move(seen)) {
  if (seen_.empty()) throw Error(ErrorCode::EmptySeenSet, "the seen set is empty");
  std::sort(seen_.begin(), seen_.end());
  seen_.erase(std::unique(seen_.begin(), seen_.end()), seen_.end());
}

double SeenSetSimilarity::score(NodeIndex c) const {
  if (std::binary_search(seen_.begin(), seen_.end(), c)) {
    throw Error(ErrorCode::ConceptInSeenSet, "'" + measure_->taxonomy().id(c) + "' belongs to the seen set");
  }
  double best = 0.0;
  for (NodeIndex s : seen_) best = std::max(best, (*measure_)(c, s));
  return best;
}

double set_similarity(const PairwiseMeasure& measure, std::span<const NodeIndex> seen, NodeIndex c) {
  return SeenSetSimilarity(measure, {seen.begin(), seen.end()}).score(c);
}

ExternalScores ExternalScores::read(std::istream& in, const Taxonomy& t) {
  ExternalScores table;
  table.taxonomy_ = &t;
  table.scores_.assign(t.size(), std::nullopt);
  std::vector<std::string> unknown;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = text::chomp(line);
    if (text::skippable(view)) continue;
    const auto fields = text::split(view, '\t');
    const auto value = fields.size() == 2 ? text::parse_number<double>(text::trim(fields[1])) : std::nullopt;
    if (!value || !std::isfinite(*value) || !is_valid_concept_id(fields[0])) {
      throw Error(ErrorCode::MalformedLine, "line " + std::to_string(line_no) + ": expected 'concept_id<TAB>score'");
    }
    const auto node = t.find(fields[0]);
    if (!node) {
      unknown.emplace_back(fields[0]);
      continue;
    }
    double v = *value;
    if (v < 0.0 || v > 1.0) {
      ++table.clamped_;
      v = std::clamp(v, 0.0, 1.0);
    }
    table.scores_[*node] = v;
  }
  if (!unknown.empty()) {
    std::string names;
    for (std::size_t i = 0; i < unknown.size() && i < 10; ++i) names += (i ? ", " : "") + unknown[i];
    if (unknown.size() > 10) names += ", ...";
    throw Error(ErrorCode::UnknownScoreId,
                std::to_string(unknown.size()) + " score ids not in the taxonomy: " + names);
  }
  if (table.clamped_ > 0) spdlog::warn("clamped {} external scores into [0, 1]", table.clamped_);
  return table;
}

bool ExternalScores::contains(NodeIndex c) const { return c < scores_.size() && scores_[c].has_value(); }

double ExternalScores::score(NodeIndex c) const {
  if (!contains(c)) {
    throw Error(ErrorCode::MissingScore, "no external score for '" + taxonomy_->id(c) + "'");
  }
  return *scores_[c];
}

}  // namespace cog
