#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace cog::testing {

NaiveGraph::NaiveGraph(const std::vector<Edge>& edges) {
  for (const auto& e : edges) {
    nodes_.insert(e.child);
    nodes_.insert(e.parent);
    parents_[e.child].insert(e.parent);
    children_[e.parent].insert(e.child);
  }
}

namespace {

std::set<std::string> closure(const std::map<std::string, std::set<std::string>>& next, const std::string& start) {
  std::set<std::string> seen;
  std::deque<std::string> queue{start};
  while (!queue.empty()) {
    const auto cur = queue.front();
    queue.pop_front();
    const auto it = next.find(cur);
    if (it == next.end()) continue;
    for (const auto& n : it->second) {
      if (seen.insert(n).second) queue.push_back(n);
    }
  }
  return seen;
}

}  // namespace

std::set<std::string> NaiveGraph::ancestors(const std::string& c) const {
  if (const auto it = ancestor_memo_.find(c); it != ancestor_memo_.end()) return it->second;
  auto a = closure(parents_, c);
  a.erase(c);
  return ancestor_memo_[c] = a;
}

std::set<std::string> NaiveGraph::descendants(const std::string& c) const {
  auto d = closure(children_, c);
  d.insert(c);
  return d;
}

double NaiveGraph::ic(const std::string& c) const {
  if (const auto it = ic_memo_.find(c); it != ic_memo_.end()) return it->second;
  return ic_memo_[c] = -std::log(static_cast<double>(descendants(c).size()) / static_cast<double>(nodes_.size()));
}

std::size_t NaiveGraph::depth(const std::string& c) const {
  std::map<std::string, std::size_t> dist{{c, 0}};
  std::deque<std::string> queue{c};
  while (!queue.empty()) {
    const auto cur = queue.front();
    queue.pop_front();
    const auto it = parents_.find(cur);
    if (it == parents_.end()) return dist[cur] + 1;  // first parentless node reached is the root
    for (const auto& p : it->second) {
      if (dist.emplace(p, dist[cur] + 1).second) queue.push_back(p);
    }
  }
  return 1;
}

double oracle_max_subsumer_ic(const NaiveGraph& g, const std::string& c1, const std::string& c2) {
  auto s1 = g.ancestors(c1);
  s1.insert(c1);
  auto s2 = g.ancestors(c2);
  s2.insert(c2);
  double best = -1.0;
  for (const auto& s : s1) {
    if (s2.count(s)) best = std::max(best, g.ic(s));
  }
  return best;
}

double oracle_lin(const NaiveGraph& g, const std::string& c1, const std::string& c2) {
  const double denom = g.ic(c1) + g.ic(c2);
  if (denom == 0.0) return c1 == c2 ? 1.0 : 0.0;
  auto s1 = g.ancestors(c1);
  s1.insert(c1);
  auto s2 = g.ancestors(c2);
  s2.insert(c2);
  double best = 0.0;
  for (const auto& s : s1) {
    if (s2.count(s)) best = std::max(best, 2.0 * g.ic(s) / denom);
  }
  return best;
}

std::set<std::string> oracle_filter(const NaiveGraph& g, const std::map<std::string, std::uint64_t>& images,
                                    const OracleRules& rules) {
  std::set<std::string> keep = g.nodes();
  // (a)
  for (const auto& s : rules.seen) keep.erase(s);
  // (b)
  for (const auto& s : rules.seen) {
    for (const auto& a : g.ancestors(s)) keep.erase(a);
  }
  // (c)
  for (const auto& b : rules.banned) {
    for (const auto& d : g.descendants(b)) keep.erase(d);
  }
  // (d)
  for (auto it = keep.begin(); it != keep.end();) {
    const auto found = images.find(*it);
    const std::uint64_t count = found == images.end() ? 0 : found->second;
    it = count < rules.min_images ? keep.erase(it) : std::next(it);
  }
  // (e) all judged against the same survivor set
  std::set<std::string> inner;
  for (const auto& c : keep) {
    for (const auto& a : g.ancestors(c)) {
      if (keep.count(a)) inner.insert(a);
    }
  }
  for (const auto& c : inner) keep.erase(c);
  // (f)
  for (const auto& m : rules.manual) keep.erase(m);
  return keep;
}

std::vector<double> oracle_logreg_fit(const FeatureTable& train, double lr, double wd, std::size_t iterations) {
  const std::size_t classes = train.num_classes();
  const std::size_t cols = train.dim + 1;
  const double n = static_cast<double>(train.rows);
  std::vector<double> w(classes * cols, 0.0);
  std::vector<double> grad(w.size());
  std::vector<double> p(classes);
  for (std::size_t it = 0; it < iterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < train.rows; ++i) {
      const float* x = train.values.data() + i * train.dim;
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < classes; ++k) {
        double z = w[k * cols + train.dim];
        for (std::size_t j = 0; j < train.dim; ++j) z += w[k * cols + j] * x[j];
        p[k] = z;
        top = std::max(top, z);
      }
      double sum = 0.0;
      for (auto& v : p) sum += (v = std::exp(v - top));
      for (std::size_t k = 0; k < classes; ++k) {
        const double r = p[k] / sum - (train.labels[i] == k ? 1.0 : 0.0);
        for (std::size_t j = 0; j < train.dim; ++j) grad[k * cols + j] += r * x[j] / n;
        grad[k * cols + train.dim] += r / n;
      }
    }
    for (std::size_t k = 0; k < classes; ++k) {
      for (std::size_t j = 0; j < cols; ++j) {
        const double penalty = j < train.dim ? wd * w[k * cols + j] : 0.0;
        w[k * cols + j] -= lr * (grad[k * cols + j] + penalty);
      }
    }
  }
  return w;
}

double oracle_logreg_top1(const std::vector<double>& model, std::size_t classes, const FeatureTable& test) {
  const std::size_t cols = test.dim + 1;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.rows; ++i) {
    const float* x = test.values.data() + i * test.dim;
    std::size_t best = 0;
    double best_z = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < classes; ++k) {
      double z = model[k * cols + test.dim];
      for (std::size_t j = 0; j < test.dim; ++j) z += model[k * cols + j] * x[j];
      if (z > best_z) {
        best_z = z;
        best = k;
      }
    }
    correct += best == test.labels[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(test.rows);
}

}  // namespace cog::testing
