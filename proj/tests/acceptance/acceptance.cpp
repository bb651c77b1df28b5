// Acceptance gate. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "cog/features.hpp"
#include "cog/levels.hpp"
#include "cog/probe.hpp"
#include "cog/semsim.hpp"
#include "cog/taxonomy.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "shell.hpp"

using namespace cog;
namespace ct = cog::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// 1. Lin similarity against the all-common-subsumer oracle.
Outcome lin_oracle() {
  const auto start = Clock::now();
  Rng rng(1001);
  double worst = 0.0;
  std::size_t pairs = 0;
  for (int tax = 0; tax < 100; ++tax) {
    const auto nodes = 2 + rng.uniform_index(199);  // 2..200
    const auto edges = ct::random_tree(rng, nodes);
    const auto t = Taxonomy::from_edges(edges);
    const ct::NaiveGraph g(edges);
    const PairwiseMeasure lin(t, MeasureKind::Lin);
    for (int q = 0; q < 1000; ++q) {
      const auto c1 = static_cast<NodeIndex>(rng.uniform_index(t.size()));
      const auto c2 = static_cast<NodeIndex>(rng.uniform_index(t.size()));
      worst = std::max(worst, std::abs(lin(c1, c2) - ct::oracle_lin(g, t.id(c1), t.id(c2))));
      ++pairs;
    }
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-12 && pairs == 100000 && secs < 30.0,
          fmt::format("{} pairs, max |err| = {:.3g} (tol 1e-12), {:.2f} s (limit 30 s)", pairs, worst, secs)};
}

// 2. Hand-derived TOY6 values.
Outcome toy6_goldens() {
  const auto t = Taxonomy::from_edges(ct::toy6_edges());
  const auto ic = build_ic_table(t);
  const PairwiseMeasure lin(t, MeasureKind::Lin), wup(t, MeasureKind::WuPalmer), jc(t, MeasureKind::JiangConrath);
  const double ln2 = std::log(2.0), ln6 = std::log(6.0);
  const std::vector<std::pair<double, double>> checks{
      {ic[t.index_of("A")], ln2},
      {ic[t.index_of("a1")], ln6},
      {lin("a1", "a2"), ln2 / ln6},
      {lin("a1", "b1"), 0.0},
      {wup("a1", "a2"), 2.0 / 3.0},
      {jc("a1", "a2"), 1.0 / (1.0 + 2.0 * ln6 - 2.0 * ln2)},
  };
  double worst = 0.0;
  for (const auto& [got, want] : checks) worst = std::max(worst, std::abs(got - want));
  return {worst <= 1e-12, fmt::format("6 values, max |err| = {:.3g} (tol 1e-12)", worst)};
}

// 3. Randomized filter -> rank -> split pipelines.
Outcome level_invariants() {
  Rng rng(3003);
  std::size_t pipelines = 0, failures = 0;
  std::string first_failure;
  auto fail = [&](const std::string& why) {
    if (failures++ == 0) first_failure = fmt::format("pipeline {}: {}", pipelines, why);
  };
  while (pipelines < 50) {
    const auto nodes = 80 + rng.uniform_index(221);
    const auto edges = pipelines % 2 ? ct::random_dag(rng, nodes, 0.2) : ct::random_tree(rng, nodes);
    const auto t = Taxonomy::from_edges(edges);
    const auto meta = ct::random_meta(rng, t, 782, 0.9);
    FilterRules rules;
    ct::OracleRules oracle_rules;
    for (NodeIndex n = 0; n < t.size(); ++n) {
      const double u = rng.uniform01();
      if (u < 0.06) {
        rules.seen.push_back(t.id(n));
        oracle_rules.seen.insert(t.id(n));
      } else if (u < 0.07 && n != t.root()) {
        rules.banned_subtree_roots.push_back(t.id(n));
        oracle_rules.banned.insert(t.id(n));
      } else if (u < 0.09) {
        rules.manual_exclusions.push_back(t.id(n));
        oracle_rules.manual.insert(t.id(n));
      }
    }
    if (rules.seen.empty()) continue;
    const auto eligible = filter_eligible(t, meta, rules);
    if (eligible.size() < 4) continue;
    ++pipelines;

    std::map<std::string, std::uint64_t> images;
    for (const auto& [id, m] : meta) images[id] = m.image_count;
    std::set<std::string> got;
    for (auto n : eligible) got.insert(t.id(n));
    if (got != ct::oracle_filter(ct::NaiveGraph(edges), images, oracle_rules)) fail("filter differs from oracle");

    const PairwiseMeasure lin(t, MeasureKind::Lin);
    std::vector<NodeIndex> seen;
    for (const auto& id : rules.seen) seen.push_back(t.index_of(id));
    const SeenSetSimilarity scorer(lin, seen);
    const auto ranked = rank_unseen(t, scorer, eligible, 1 + static_cast<unsigned>(pipelines % 4));
    const std::size_t k = 1 + rng.uniform_index(std::min<std::size_t>(5, eligible.size()));
    const std::size_t s = 1 + rng.uniform_index(eligible.size() / k);
    const auto ls = build_levels(ranked, k, s);

    std::map<std::string, double> sim;
    for (const auto& e : ranked.entries) sim[e.id] = e.similarity;
    if (ls.levels.size() != k) fail("wrong level count");
    std::multiset<std::string> all(rules.seen.begin(), rules.seen.end());
    for (const auto& level : ls.levels) {
      if (level.size() != s) fail("wrong level size");
      all.insert(level.begin(), level.end());
    }
    all.insert(ls.discarded.begin(), ls.discarded.end());
    std::set<std::string> expect(rules.seen.begin(), rules.seen.end());
    expect.insert(got.begin(), got.end());
    if (std::set<std::string>(all.begin(), all.end()) != expect || all.size() != expect.size()) {
      fail("levels, discarded and seen are not a disjoint cover of seen + eligible");
    }
    for (std::size_t i = 0; i + 1 < ls.levels.size(); ++i) {
      double lo = 2.0, hi = -1.0;
      for (const auto& id : ls.levels[i]) lo = std::min(lo, sim[id]);
      for (const auto& id : ls.levels[i + 1]) hi = std::max(hi, sim[id]);
      if (lo < hi) fail(fmt::format("ordering violated between L{} and L{}", i + 1, i + 2));
    }
  }
  return {failures == 0, failures == 0 ? "50 pipelines: filter == oracle, disjoint cover, exact sizes, ordered"
                                       : fmt::format("{} violations; first: {}", failures, first_failure)};
}

// 4. Gap arithmetic at the benchmark's scale.
Outcome gap_arithmetic() {
  RankedList ranked;
  for (std::size_t i = 0; i < 5146; ++i) ranked.entries.push_back({fmt::format("c{:05}", i), 1.0 - i * 1e-4});
  const auto ls = build_levels(ranked, 5, 1000);
  const bool sizes = std::all_of(ls.levels.begin(), ls.levels.end(), [](const auto& l) { return l.size() == 1000; });
  const bool gaps = ls.gaps == std::vector<std::size_t>{36, 36, 37, 37};
  // L2 starts after 1000 + 36 entries; L5 ends at the last entry
  const bool placement = ls.levels[1].front() == "c01036" && ls.levels[4].back() == "c05145";
  return {sizes && gaps && placement && ls.discarded.size() == 146 && ls.levels.size() == 5,
          fmt::format("gaps ({}), {} levels x 1000, {} discarded", fmt::join(ls.gaps, ","), ls.levels.size(),
                      ls.discarded.size())};
}

// 5. Analytic gradient vs central finite differences.
Outcome gradient_check() {
  Rng rng(5005);
  double worst = 0.0;
  for (int instance = 0; instance < 20; ++instance) {
    auto data = ct::gaussian_table(rng, ct::random_means(rng, 5, 8, 2.0), 4, 1.0);
    auto model = LinearModel::zeros(5, 8);
    for (auto& w : model.weights) w = rng.normal();
    for (auto& b : model.bias) b = rng.normal();
    const double wd = rng.log_uniform(1e-6, 1e-1);
    std::vector<std::size_t> rows(data.rows);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    const auto g = softmax_cross_entropy(model, data, rows, wd);
    std::vector<double> analytic = g.grad_weights, numeric;
    analytic.insert(analytic.end(), g.grad_bias.begin(), g.grad_bias.end());
    const double h = 1e-5;
    auto probe = [&](double& p) {
      const double keep = p;
      p = keep + h;
      const double up = softmax_cross_entropy(model, data, rows, wd).loss;
      p = keep - h;
      const double down = softmax_cross_entropy(model, data, rows, wd).loss;
      p = keep;
      numeric.push_back((up - down) / (2.0 * h));
    };
    for (auto& w : model.weights) probe(w);
    for (auto& b : model.bias) probe(b);
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
      na += analytic[i] * analytic[i];
      nn += numeric[i] * numeric[i];
    }
    worst = std::max(worst, std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-12}));
  }
  return {worst < 1e-4, fmt::format("20 instances (C=5, d=8), max ||ga-gn||/max(||ga||,||gn||) = {:.3g} (tol 1e-4)",
                                    worst)};
}

// 6. Full protocol on separable blobs vs an independent logistic regression.
Outcome blobs_probe() {
  const auto start = Clock::now();
  Rng rng(6006);
  const auto means = ct::circle_means(4, 3.0);
  std::vector<LevelData> levels{{"blobs", ct::gaussian_table(rng, means, 200, 0.3), ct::gaussian_table(rng, means, 200, 0.3)}};
  ProbeConfig cfg;
  cfg.shot_counts = {kAllShots};
  cfg.seeds = 5;
  const auto r = run_protocol(levels, cfg, 6, 1);
  const double mean = r.aggregates[0].mean_top1;
  const auto oracle_model = ct::oracle_logreg_fit(levels[0].train, 0.5, 1e-6, 2000);
  const double oracle = ct::oracle_logreg_top1(oracle_model, 4, levels[0].test);
  const double secs = seconds_since(start);
  const bool ok = r.failed_units() == 0 && mean >= 0.97 && std::abs(mean - oracle) <= 0.02 && secs < 60.0;
  return {ok, fmt::format("mean top-1 {:.4f} (>= 0.97), oracle {:.4f} (|diff| <= 0.02), {:.2f} s (limit 60 s)", mean,
                          oracle, secs)};
}

// Synthetic level suite: shared class-mean directions, scaled per level.
std::vector<LevelData> synthetic_suite(const std::vector<double>& scales, std::size_t train_per_class,
                                       std::size_t test_per_class, std::uint64_t seed) {
  Rng rng(seed);
  const auto base = ct::random_means(rng, 20, 32, 1.0);
  std::vector<LevelData> levels;
  for (std::size_t l = 0; l < scales.size(); ++l) {
    auto means = base;
    for (auto& m : means) {
      for (auto& v : m) v *= scales[l];
    }
    levels.push_back({fmt::format("L{}", l + 1), ct::gaussian_table(rng, means, train_per_class, 1.0),
                      ct::gaussian_table(rng, means, test_per_class, 1.0)});
  }
  return levels;
}

// 7. Accuracy falls level by level for every seed.
Outcome monotone_levels() {
  const auto start = Clock::now();
  const auto levels = synthetic_suite({5, 4, 3, 2, 1}, 60, 100, 7007);
  ProbeConfig cfg;
  cfg.shot_counts = {kAllShots};
  cfg.seeds = 5;
  const auto r = run_protocol(levels, cfg, 7, 1);
  // units are level-major, then seeds
  bool strict = r.failed_units() == 0;
  for (std::size_t s = 0; s < cfg.seeds; ++s) {
    for (std::size_t l = 0; l + 1 < levels.size(); ++l) {
      strict = strict && r.units[l * cfg.seeds + s].test_top1 > r.units[(l + 1) * cfg.seeds + s].test_top1;
    }
  }
  std::vector<std::string> means;
  for (const auto& a : r.aggregates) means.push_back(fmt::format("{:.3f}", a.mean_top1));
  const double secs = seconds_since(start);
  return {strict && secs < 300.0,
          fmt::format("mean top-1 by level [{}], strictly decreasing for every seed: {}, {:.1f} s (limit 300 s)",
                      fmt::join(means, ", "), strict ? "yes" : "no", secs)};
}

// 8. Accuracy does not drop as shots grow, within one pooled std.
Outcome fewshot_trend() {
  const auto levels = synthetic_suite({5, 4, 3, 2, 1}, 160, 100, 8008);
  const std::vector<LevelData> middle{levels[2]};
  ProbeConfig cfg;
  cfg.shot_counts = {2, 8, 32, 128};
  cfg.seeds = 5;
  const auto r = run_protocol(middle, cfg, 8, 1);
  bool ok = r.failed_units() == 0;
  std::vector<std::string> cells;
  for (std::size_t i = 0; i < r.aggregates.size(); ++i) {
    const auto& a = r.aggregates[i];
    cells.push_back(fmt::format("N={}: {:.3f}+-{:.3f}", a.shots, a.mean_top1, a.std_top1));
    if (i == 0) continue;
    const auto& p = r.aggregates[i - 1];
    const double pooled = std::sqrt((a.std_top1 * a.std_top1 + p.std_top1 * p.std_top1) / 2.0);
    ok = ok && a.mean_top1 >= p.mean_top1 - pooled;
  }
  return {ok, fmt::format("level L3: {}", fmt::join(cells, "; "))};
}

// 9. CLI outputs do not depend on --jobs.
Outcome cli_determinism() {
  const auto dir = ct::scratch_dir("acceptance_cli");
  Rng rng(9009);
  const auto edges = ct::random_dag(rng, 250, 0.15);
  const auto t = Taxonomy::from_edges(edges);
  {
    std::ofstream e(dir / "edges.tsv");
    write_edges(e, edges);
    std::ofstream m(dir / "meta.tsv"), s(dir / "seen.txt"), im(dir / "images.tsv");
    for (NodeIndex n = 0; n < t.size(); ++n) {
      m << t.id(n) << '\t' << (t.is_leaf(n) ? 900 : 0) << '\t' << "concept " << t.id(n) << '\n';
      if (t.is_leaf(n) && n % 5 == 0) s << t.id(n) << '\n';
      for (int i = 0; i < 14; ++i) im << t.id(n) << '\t' << t.id(n) << "_img" << i << '\n';
    }
  }
  const std::string cog = COG_BINARY;
  const std::string build = cog + " levels build --edges " + (dir / "edges.tsv").string() + " --meta " +
                            (dir / "meta.tsv").string() + " --seen-file " + (dir / "seen.txt").string() +
                            " --images " + (dir / "images.tsv").string() +
                            " -K 3 -S 12 --test-size 4 --train-cap 8 --seed 42";
  const auto b1 = ct::shell(build + " --jobs 1 --out " + (dir / "j1").string());
  const auto b8 = ct::shell(build + " --jobs 8 --out " + (dir / "j8").string());
  if (b1.exit_code != 0 || b8.exit_code != 0) return {false, "levels build failed: " + b1.output + b8.output};
  const bool levels_same = ct::slurp(dir / "j1" / "levels.json") == ct::slurp(dir / "j8" / "levels.json") &&
                           ct::slurp(dir / "j1" / "manifests.json") == ct::slurp(dir / "j8" / "manifests.json");

  // One feature file per level, keyed by image id.
  const auto levels = nlohmann::json::parse(ct::slurp(dir / "j1" / "levels.json"))["levels"];
  std::string level_flags;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    FeatureTable f;
    f.dim = 6;
    const auto concepts = levels[l].get<std::vector<std::string>>();
    f.concepts = numbered_concepts(concepts.size());
    for (std::size_t c = 0; c < concepts.size(); ++c) {
      std::vector<double> mean(f.dim);
      for (auto& v : mean) v = 2.0 * rng.normal();
      for (int i = 0; i < 14; ++i) {
        for (double m : mean) f.values.push_back(static_cast<float>(m + rng.normal()));
        f.labels.push_back(static_cast<std::uint32_t>(c));
        f.image_ids.push_back(concepts[c] + "_img" + std::to_string(i));
        ++f.rows;
      }
    }
    const auto path = dir / fmt::format("level{}.cogf", l + 1);
    std::ofstream out(path, std::ios::binary);
    write_features(out, f);
    level_flags += fmt::format(" --level L{}={}", l + 1, path.string());
  }
  const std::string probe = cog + " probe run" + level_flags + " --manifests " +
                            (dir / "j1" / "manifests.json").string() +
                            " --seeds 3 --trials 4 --epochs 15 --shots 1,4,all --seed 9 --model m";
  const auto p1 = ct::shell(probe + " --jobs 1 --out " + (dir / "p1").string());
  const auto p8 = ct::shell(probe + " --jobs 8 --out " + (dir / "p8").string());
  if (p1.exit_code != 0 || p8.exit_code != 0) return {false, "probe run failed: " + p1.output + p8.output};
  const bool results_same = ct::slurp(dir / "p1" / "results.json") == ct::slurp(dir / "p8" / "results.json") &&
                            ct::slurp(dir / "p1" / "results.csv") == ct::slurp(dir / "p8" / "results.csv");
  std::filesystem::remove_all(dir);
  return {levels_same && results_same,
          fmt::format("levels.json+manifests.json identical: {}; results.json+results.csv identical: {}",
                      levels_same ? "yes" : "no", results_same ? "yes" : "no")};
}

// 10. COGF pack -> load -> pack is bit-exact.
Outcome cogf_round_trip() {
  Rng rng(1010);
  std::size_t tables = 0, mismatches = 0;
  std::vector<std::pair<std::size_t, std::size_t>> shapes{{1, 1}, {10000, 512}, {10000, 1}, {1, 512}};
  for (int i = 0; i < 16; ++i) shapes.emplace_back(1 + rng.uniform_index(10000), 1 + rng.uniform_index(512));
  for (const auto& [n, d] : shapes) {
    FeatureTable t;
    t.rows = n;
    t.dim = d;
    t.values.resize(n * d);
    for (auto& v : t.values) {
      const auto bits = static_cast<std::uint32_t>(rng.next_u64());
      std::memcpy(&v, &bits, sizeof v);  // arbitrary bit patterns, NaNs included
    }
    const std::size_t classes = 1 + rng.uniform_index(1000);
    for (std::size_t r = 0; r < n; ++r) t.labels.push_back(static_cast<std::uint32_t>(rng.uniform_index(classes)));
    t.concepts = numbered_concepts(classes);
    if (tables % 2 == 1) {
      for (std::size_t r = 0; r < n; ++r) {
        std::string id(rng.uniform_index(40), 'x');
        for (auto& ch : id) ch = static_cast<char>('!' + rng.uniform_index(94));
        t.image_ids.push_back(std::move(id));
      }
    }
    std::ostringstream first(std::ios::binary);
    write_features(first, t);
    std::istringstream in(first.str(), std::ios::binary);
    const auto back = load_features(in, classes);
    std::ostringstream second(std::ios::binary);
    write_features(second, back);
    const bool exact = first.str() == second.str() && back.labels == t.labels && back.image_ids == t.image_ids &&
                       std::memcmp(back.values.data(), t.values.data(), n * d * sizeof(float)) == 0;
    mismatches += exact ? 0 : 1;
    ++tables;
  }
  return {mismatches == 0, fmt::format("{} tables up to n=10000, d=512, {} mismatches", tables, mismatches)};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"lin-oracle", lin_oracle},
      {"toy6-goldens", toy6_goldens},
      {"level-invariants", level_invariants},
      {"gap-arithmetic", gap_arithmetic},
      {"gradient-check", gradient_check},
      {"blobs-probe", blobs_probe},
      {"monotone-levels", monotone_levels},
      {"fewshot-trend", fewshot_trend},
      {"cli-determinism", cli_determinism},
      {"cogf-round-trip", cogf_round_trip},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << i + 1 << " " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
