#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "cog/error.hpp"
#include "cog/rng.hpp"
#include "cog/taxonomy.hpp"
#include "expect_error.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace cog;
using cog::testing::code_of;
using cog::testing::toy6_edges;

namespace {

Taxonomy parse(const std::string& text) {
  std::istringstream in(text);
  const auto edges = read_edges(in);
  return Taxonomy::from_edges(edges);
}

}  // namespace

TEST_CASE("toy6 structure") {
  const auto edges = toy6_edges();
  const auto t = Taxonomy::from_edges(edges);
  CHECK(t.size() == 6);
  CHECK(t.id(t.root()) == "entity");
  CHECK(t.ancestors("a1") == std::vector<ConceptId>{"A", "entity"});
  CHECK(t.ancestors("b1") == std::vector<ConceptId>{"B", "entity"});
  CHECK(t.ancestors("entity").empty());
  CHECK(t.descendant_count("entity") == 6);
  CHECK(t.descendant_count("A") == 3);
  CHECK(t.descendant_count("a1") == 1);
  CHECK(t.depth(t.root()) == 1);
  CHECK(t.depth(t.index_of("a2")) == 3);
  CHECK(t.is_leaf(t.index_of("b1")));
  CHECK_FALSE(t.is_leaf(t.index_of("B")));
}

TEST_CASE("parse errors") {
  SUBCASE("cycle names an edge") {
    auto edges = toy6_edges();
    edges.push_back({"entity", "a1"});
    try {
      (void)Taxonomy::from_edges(edges);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::CycleDetected);
      CHECK(std::string(e.what()).find(" -> ") != std::string::npos);
    }
  }
  SUBCASE("self loop") {
    CHECK(code_of([] { parse("x\tx\n"); }) == ErrorCode::CycleDetected);
  }
  SUBCASE("two roots listed") {
    try {
      (void)parse("a\tentity\nb\tentity2\n");
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MultipleRoots);
      CHECK(std::string(e.what()).find("entity2") != std::string::npos);
    }
  }
  SUBCASE("malformed line number") {
    try {
      (void)parse("# header\na\tb\nbroken line\n");
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MalformedLine);
      CHECK(std::string(e.what()).find("3") != std::string::npos);
    }
  }
  SUBCASE("extra column") { CHECK(code_of([] { parse("a\tb\tc\n"); }) == ErrorCode::MalformedLine); }
  SUBCASE("whitespace in id") { CHECK(code_of([] { parse("a b\tc\n"); }) == ErrorCode::MalformedLine); }
  SUBCASE("empty") { CHECK(code_of([] { parse("# nothing\n\n"); }) == ErrorCode::EmptyTaxonomy); }
  SUBCASE("unknown concept") {
    const auto t = parse("a\tb\n");
    CHECK(code_of([&] { (void)t.index_of("zzz"); }) == ErrorCode::UnknownConcept);
    CHECK(code_of([&] { (void)t.ancestors("zzz"); }) == ErrorCode::UnknownConcept);
  }
}

TEST_CASE("comments, blank lines, CRLF and duplicates") {
  const auto t = parse("# c\r\n\r\na1\tA\r\na1\tA\nA\tentity\n");
  CHECK(t.size() == 3);
  CHECK(t.edges().size() == 2);
}

TEST_CASE("metadata") {
  const auto t = Taxonomy::from_edges(toy6_edges());
  std::istringstream in("a1\t900\tcat\ta small\tfeline\nb1\t10\tdog\n");
  const auto meta = read_meta(in, t);
  CHECK(meta.at("a1").image_count == 900);
  CHECK(meta.at("a1").name == "cat");
  CHECK(meta.at("a1").description == "a small\tfeline");
  CHECK(meta.at("b1").description.empty());
  CHECK(image_count(meta, "a2") == 0);

  std::istringstream unknown("zz\t1\tx\n");
  CHECK(code_of([&] { read_meta(unknown, t); }) == ErrorCode::UnknownConceptInMeta);
  std::istringstream bad_count("a1\tlots\tx\n");
  CHECK(code_of([&] { read_meta(bad_count, t); }) == ErrorCode::MalformedLine);
  std::istringstream dup("a1\t1\tx\na1\t2\ty\n");
  CHECK(code_of([&] { read_meta(dup, t); }) == ErrorCode::MalformedLine);
}

TEST_CASE("random DAG properties against naive closures") {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const auto edges = trial % 2 ? cog::testing::random_dag(rng, 60, 0.3) : cog::testing::random_tree(rng, 60);
    const auto t = Taxonomy::from_edges(edges);
    const cog::testing::NaiveGraph g(edges);
    const auto root = t.root();
    for (NodeIndex n = 0; n < t.size(); ++n) {
      const auto anc = t.ancestors(t.id(n));
      const auto naive = g.ancestors(t.id(n));
      CHECK(std::set<std::string>(anc.begin(), anc.end()) == naive);
      CHECK(std::find(anc.begin(), anc.end(), t.id(n)) == anc.end());
      if (n != root) CHECK(std::find(anc.begin(), anc.end(), t.id(root)) != anc.end());
      CHECK(t.descendant_count(n) == g.descendants(t.id(n)).size());
      CHECK(t.depth(n) == g.depth(t.id(n)));
    }
    CHECK(t.descendant_count(root) == t.size());
    if (trial % 2 == 0) {
      std::size_t sum = 1;
      for (NodeIndex c : t.children(root)) sum += t.descendant_count(c);
      CHECK(sum == t.size());
      for (const auto& e : edges) CHECK(t.descendant_count(e.parent) > t.descendant_count(e.child));
    }
    // topological order puts parents first
    std::vector<std::size_t> pos(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) pos[t.topological_order()[i]] = i;
    for (NodeIndex n = 0; n < t.size(); ++n) {
      for (NodeIndex p : t.parents(n)) CHECK(pos[p] < pos[n]);
    }
  }
}

TEST_CASE("edge round trip") {
  Rng rng(5);
  const auto edges = cog::testing::random_dag(rng, 80, 0.25);
  const auto t = Taxonomy::from_edges(edges);
  std::ostringstream out;
  write_edges(out, t.edges());
  std::istringstream in(out.str());
  auto back = read_edges(in);
  std::sort(back.begin(), back.end());
  auto expect = edges;
  std::sort(expect.begin(), expect.end());
  expect.erase(std::unique(expect.begin(), expect.end()), expect.end());
  CHECK(back == expect);
}
