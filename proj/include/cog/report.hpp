#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace cog {

/// One aggregate (level, shots) cell of one model's results file.
struct ReportRow {
  std::string model;
  std::string category;
  std::string level;
  std::string shots;  // "all" or a count
  std::optional<double> mean_top1;
  std::optional<double> std_top1;
};

struct ModelResults {
  std::string model;
  std::string category;
  std::string levels_hash;
  std::string config_hash;
  std::vector<std::string> levels;
  std::vector<ReportRow> rows;
};

/// Reads the aggregate rows of a results.json. Throws SchemaMismatch.
ModelResults parse_results(const nlohmann::ordered_json& j);

struct DeltaRow {
  std::string model;
  std::string category;
  std::string level;
  std::string shots;
  double delta_top1 = 0.0;  // mean(model) - mean(baseline)
};

struct Report {
  std::vector<ReportRow> absolute;
  std::vector<DeltaRow> relative;  // empty without a baseline
  std::string config_hash;         // fingerprint of the merged inputs
};

/// Merges models (which must share level definitions) and, with a
/// baseline, computes deltas for every cell present in both.
/// Throws SchemaMismatch (level definitions differ, duplicate model ids) or
/// BaselineMissing.
Report build_report(const std::vector<ModelResults>& models, const std::optional<std::string>& baseline);

/// Writes report.csv, relative.csv (with baseline), and plot data:
/// plot_absolute_levels.csv, plot_relative_<category>.csv,
/// plot_fewshot_<level>.csv. Returns the written paths.
std::vector<std::filesystem::path> write_report(const Report& report, const std::filesystem::path& out_dir);

}  // namespace cog
