#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cog/report.hpp"
#include "cog/serialize.hpp"
#include "expect_error.hpp"

using namespace cog;
using cog::testing::code_of;

namespace {

ProbeResult fake_result(double l1_all, double l2_all) {
  ProbeResult r;
  r.level_names = {"L1", "L2"};
  const double means[2][2] = {{l1_all - 0.2, l1_all}, {l2_all - 0.2, l2_all}};
  for (std::size_t l = 0; l < 2; ++l) {
    std::size_t si = 0;
    for (std::size_t shots : {std::size_t{2}, kAllShots}) {
      UnitResult u;
      u.level = l;
      u.shots = shots;
      u.ok = true;
      u.test_top1 = means[l][si];
      u.lr = 0.1;
      u.wd = 1e-4;
      r.units.push_back(u);
      AggregateResult a;
      a.level = l;
      a.shots = shots;
      a.mean_top1 = means[l][si];
      a.std_top1 = 0.0;
      a.ok_seeds = 1;
      r.aggregates.push_back(a);
      ++si;
    }
  }
  return r;
}

ModelResults model(const std::string& name, const std::string& category, double l1, double l2,
                   const std::string& levels_hash = "abc") {
  ProbeConfig cfg;
  cfg.seeds = 1;
  cfg.shot_counts = {2, kAllShots};
  ResultsMeta meta{name, category, levels_hash, {"cfg-" + name, 1, kToolVersion}, {0, 0}};
  return parse_results(results_to_json(fake_result(l1, l2), cfg, meta));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("results parse back") {
  const auto m = model("resnet", "supervised", 0.8, 0.5);
  CHECK(m.model == "resnet");
  CHECK(m.levels == std::vector<std::string>{"L1", "L2"});
  REQUIRE(m.rows.size() == 4);
  CHECK(m.rows[1].shots == "all");
  CHECK(*m.rows[1].mean_top1 == 0.8);
  CHECK(code_of([] { (void)parse_results(ordered_json{{"schema", "other/1"}}); }) == ErrorCode::SchemaMismatch);
}

TEST_CASE("report deltas") {
  const auto a = model("a", "supervised", 0.8, 0.5);
  const auto b = model("b", "self-supervised", 0.7, 0.55);
  SUBCASE("no baseline") {
    const auto r = build_report({a}, std::nullopt);
    CHECK(r.absolute.size() == 4);
    CHECK(r.relative.empty());
  }
  SUBCASE("baseline is itself") {
    const auto r = build_report({a}, std::string("a"));
    for (const auto& d : r.relative) CHECK(d.delta_top1 == 0.0);
  }
  SUBCASE("two models") {
    const auto r = build_report({a, b}, std::string("a"));
    REQUIRE(r.relative.size() == 8);
    CHECK(r.relative[5].model == "b");
    CHECK(r.relative[5].level == "L1");
    CHECK(r.relative[5].shots == "all");
    CHECK(r.relative[5].delta_top1 == doctest::Approx(0.7 - 0.8));
    CHECK(r.relative[7].delta_top1 == doctest::Approx(0.55 - 0.5));
  }
  SUBCASE("errors") {
    CHECK(code_of([&] { (void)build_report({a, b}, std::string("zzz")); }) == ErrorCode::BaselineMissing);
    CHECK(code_of([&] { (void)build_report({a, model("c", "x", 0.1, 0.1, "other")}, std::nullopt); }) ==
          ErrorCode::SchemaMismatch);
    CHECK(code_of([&] { (void)build_report({a, a}, std::nullopt); }) == ErrorCode::SchemaMismatch);
  }
}

TEST_CASE("report files") {
  const auto dir = std::filesystem::temp_directory_path() / "cog_report_test";
  std::filesystem::remove_all(dir);
  const auto r = build_report({model("a", "sup", 0.8, 0.5), model("b", "ssl", 0.7, 0.55)}, std::string("a"));
  const auto written = write_report(r, dir);
  for (const char* name : {"report.csv", "relative.csv", "plot_absolute_levels.csv", "plot_fewshot_L1.csv",
                           "plot_fewshot_L2.csv", "plot_relative_sup.csv", "plot_relative_ssl.csv"}) {
    CAPTURE(name);
    REQUIRE(std::filesystem::exists(dir / name));
    CHECK(slurp(dir / name).rfind("# config_hash=" + r.config_hash + "\n", 0) == 0);
  }
  CHECK(written.size() == 7);
  const auto fewshot = slurp(dir / "plot_fewshot_L1.csv");
  CHECK(fewshot.find("a,2,") < fewshot.find("a,all,"));
  std::filesystem::remove_all(dir);
}
