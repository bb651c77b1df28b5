#include "cog/report.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "cog/error.hpp"
#include "cog/serialize.hpp"

namespace cog {

namespace {

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

// File-name-safe rendering of a level or category name.
std::string slug(const std::string& s) {
  std::string out;
  for (char c : s) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_');
  return out.empty() ? "_" : out;
}

// Orders shot labels numerically with "all" last.
bool shots_less(const std::string& a, const std::string& b) {
  if (a == b) return false;
  if (a == "all") return false;
  if (b == "all") return true;
  return std::stoull(a) < std::stoull(b);
}

void write_file(const std::filesystem::path& path, const std::string& content, std::vector<std::filesystem::path>& written) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  written.push_back(path);
}

}  // namespace

ModelResults parse_results(const nlohmann::ordered_json& j) {
  if (!j.is_object() || j.value("schema", "") != kResultsSchema) {
    throw Error(ErrorCode::SchemaMismatch, "not a '" + std::string(kResultsSchema) + "' results file");
  }
  try {
    ModelResults m;
    m.model = j.at("model").get<std::string>();
    m.category = j.at("category").get<std::string>();
    m.levels_hash = j.at("levels_hash").get<std::string>();
    m.config_hash = j.at("provenance").at("config_hash").get<std::string>();
    m.levels = j.at("levels").get<std::vector<std::string>>();
    for (const auto& a : j.at("aggregates")) {
      ReportRow r;
      r.model = m.model;
      r.category = m.category;
      r.level = a.at("level").get<std::string>();
      r.shots = a.at("shots").get<std::string>();
      if (!a.at("mean_top1").is_null()) r.mean_top1 = a.at("mean_top1").get<double>();
      if (!a.at("std_top1").is_null()) r.std_top1 = a.at("std_top1").get<double>();
      m.rows.push_back(std::move(r));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("malformed results file: ") + e.what());
  }
}

Report build_report(const std::vector<ModelResults>& models, const std::optional<std::string>& baseline) {
  if (models.empty()) throw Error(ErrorCode::InvalidArgument, "no results files given");
  std::set<std::string> names;
  for (const auto& m : models) {
    if (m.levels_hash != models.front().levels_hash) {
      throw Error(ErrorCode::SchemaMismatch, "model '" + m.model + "' was evaluated on different level definitions (" +
                                                 m.levels_hash + " vs " + models.front().levels_hash + ")");
    }
    if (!names.insert(m.model).second) throw Error(ErrorCode::SchemaMismatch, "duplicate model id '" + m.model + "'");
  }

  Report report;
  ordered_json fingerprint = ordered_json::array();
  for (const auto& m : models) {
    fingerprint.push_back({m.model, m.config_hash});
    report.absolute.insert(report.absolute.end(), m.rows.begin(), m.rows.end());
  }
  fingerprint.push_back(baseline.value_or(""));
  report.config_hash = json_fingerprint(fingerprint);

  if (baseline) {
    const auto it = std::find_if(models.begin(), models.end(), [&](const ModelResults& m) { return m.model == *baseline; });
    if (it == models.end()) throw Error(ErrorCode::BaselineMissing, "baseline model '" + *baseline + "' not among the inputs");
    std::map<std::pair<std::string, std::string>, double> base;
    for (const auto& r : it->rows) {
      if (r.mean_top1) base[{r.level, r.shots}] = *r.mean_top1;
    }
    for (const auto& r : report.absolute) {
      const auto b = base.find({r.level, r.shots});
      if (!r.mean_top1 || b == base.end()) continue;
      report.relative.push_back({r.model, r.category, r.level, r.shots, *r.mean_top1 - b->second});
    }
  }
  return report;
}

std::vector<std::filesystem::path> write_report(const Report& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  const std::string header = "# config_hash=" + report.config_hash + "\n";

  std::string abs = header + "model,category,level,shots,mean_top1,std_top1\n";
  for (const auto& r : report.absolute) {
    abs += fmt::format("{},{},{},{},{},{}\n", r.model, r.category, r.level, r.shots, opt_number(r.mean_top1),
                       opt_number(r.std_top1));
  }
  write_file(out_dir / "report.csv", abs, written);

  std::string plot_abs = header + "model,level,mean_top1,std_top1\n";
  for (const auto& r : report.absolute) {
    if (r.shots == "all") plot_abs += fmt::format("{},{},{},{}\n", r.model, r.level, opt_number(r.mean_top1), opt_number(r.std_top1));
  }
  write_file(out_dir / "plot_absolute_levels.csv", plot_abs, written);

  // Few-shot curves: one file per level, rows sorted by model then shots.
  std::map<std::string, std::vector<const ReportRow*>> by_level;
  for (const auto& r : report.absolute) by_level[r.level].push_back(&r);
  for (auto& [level, rows] : by_level) {
    std::stable_sort(rows.begin(), rows.end(), [](const ReportRow* a, const ReportRow* b) {
      if (a->model != b->model) return a->model < b->model;
      return shots_less(a->shots, b->shots);
    });
    std::string body = header + "model,shots,mean_top1,std_top1\n";
    for (const auto* r : rows) body += fmt::format("{},{},{},{}\n", r->model, r->shots, opt_number(r->mean_top1), opt_number(r->std_top1));
    write_file(out_dir / ("plot_fewshot_" + slug(level) + ".csv"), body, written);
  }

  if (!report.relative.empty()) {
    std::string rel = header + "model,category,level,shots,delta_top1\n";
    std::map<std::string, std::string> per_category;
    for (const auto& d : report.relative) {
      rel += fmt::format("{},{},{},{},{}\n", d.model, d.category, d.level, d.shots, format_number(d.delta_top1));
      if (d.shots == "all") {
        auto& body = per_category[d.category];
        if (body.empty()) body = header + "model,level,delta_top1\n";
        body += fmt::format("{},{},{}\n", d.model, d.level, format_number(d.delta_top1));
      }
    }
    write_file(out_dir / "relative.csv", rel, written);
    for (const auto& [category, body] : per_category) {
      write_file(out_dir / ("plot_relative_" + slug(category) + ".csv"), body, written);
    }
  }
  return written;
}

}  // namespace cog
