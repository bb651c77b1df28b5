#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace cog {

/// Run configuration read from a small TOML subset:
///
///   # comment
///   seed = 7
///   [levels]
///   K = 5
///   measure = "lin"
///   banned = ["n00007846", "n09624168"]
///
/// Values are quoted strings, integers, floats, booleans or flat arrays of
/// those. Keys are addressed as "section.key" ("seed" for top-level keys).
class Config {
 public:
  Config() = default;

  /// Throws MalformedLine with the line number.
  static Config parse(std::istream& in, std::filesystem::path base_dir = {});
  static Config load(const std::filesystem::path& path);

  bool has(std::string_view key) const;
  const nlohmann::json* find(std::string_view key) const;

  /// Overrides (or adds) a value; flags use this so they win over the file.
  void set(std::string_view key, nlohmann::json value);

  std::optional<std::string> get_string(std::string_view key) const;
  std::optional<double> get_double(std::string_view key) const;
  std::optional<std::int64_t> get_int(std::string_view key) const;
  std::optional<bool> get_bool(std::string_view key) const;

  /// Relative paths are resolved against the config file's directory.
  std::optional<std::filesystem::path> get_path(std::string_view key) const;

  const nlohmann::json& values() const { return values_; }

 private:
  nlohmann::json values_ = nlohmann::json::object();
  std::filesystem::path base_dir_;
};

}  // namespace cog
