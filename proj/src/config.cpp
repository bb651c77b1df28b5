#include "cog/config.hpp"

#include <cmath>
#include <fstream>

#include "cog/error.hpp"
#include "text.hpp"

namespace cog {

namespace {

using nlohmann::json;

// Splits "a.b" into section and key; a key without a dot is top-level.
std::pair<std::string, std::string> split_key(std::string_view key) {
  const auto dot = key.find('.');
  if (dot == std::string_view::npos) return {"", std::string(key)};
  return {std::string(key.substr(0, dot)), std::string(key.substr(dot + 1))};
}

class ValueParser {
 public:
  ValueParser(std::string_view src, std::size_t line_no) : src_(src), line_no_(line_no) {}

  json parse_all() {
    json v = parse_value();
    skip_ws();
    if (pos_ != src_.size() && src_[pos_] != '#') fail("unexpected trailing characters");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::MalformedLine, "config line " + std::to_string(line_no_) + ": " + what);
  }

  void skip_ws() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t')) ++pos_;
  }

  json parse_value() {
    skip_ws();
    if (pos_ >= src_.size()) fail("missing value");
    const char c = src_[pos_];
    if (c == '"') return parse_string();
    if (c == '[') return parse_array();
    return parse_scalar();
  }

  json parse_string() {
    ++pos_;
    std::string out;
    while (pos_ < src_.size() && src_[pos_] != '"') {
      char c = src_[pos_++];
      if (c == '\\') {
        if (pos_ >= src_.size()) fail("unterminated escape");
        const char e = src_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      }
      out.push_back(c);
    }
    if (pos_ >= src_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  json parse_array() {
    ++pos_;
    json arr = json::array();
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == ']') {
      ++pos_;
      return arr;
    }
    while (true) {
      json v = parse_value();
      if (v.is_array()) fail("nested arrays are not supported");
      arr.push_back(std::move(v));
      skip_ws();
      if (pos_ >= src_.size()) fail("unterminated array");
      if (src_[pos_] == ',') {
        ++pos_;
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == ']') {
          ++pos_;
          return arr;
        }
        continue;
      }
      if (src_[pos_] == ']') {
        ++pos_;
        return arr;
      }
      fail("expected ',' or ']' in array");
    }
  }

  json parse_scalar() {
    const auto start = pos_;
    while (pos_ < src_.size() && src_[pos_] != ',' && src_[pos_] != ']' && src_[pos_] != '#' && src_[pos_] != ' ' &&
           src_[pos_] != '\t') {
      ++pos_;
    }
    const auto token = src_.substr(start, pos_ - start);
    if (token == "true") return true;
    if (token == "false") return false;
    if (auto i = text::parse_number<std::int64_t>(token)) return *i;
    if (auto d = text::parse_number<double>(token); d && std::isfinite(*d)) return *d;
    fail("cannot parse value '" + std::string(token) + "' (strings must be quoted)");
  }

  std::string_view src_;
  std::size_t line_no_;
  std::size_t pos_ = 0;
};

}  // namespace

Config Config::parse(std::istream& in, std::filesystem::path base_dir) {
  Config cfg;
  cfg.base_dir_ = std::move(base_dir);
  std::string section;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = text::trim(text::chomp(line));
    if (view.empty() || view.front() == '#') continue;
    if (view.front() == '[') {
      const auto close = view.find(']');
      if (close == std::string_view::npos) {
        throw Error(ErrorCode::MalformedLine, "config line " + std::to_string(line_no) + ": unterminated section");
      }
      section = std::string(text::trim(view.substr(1, close - 1)));
      if (section.empty() || section.find('.') != std::string::npos) {
        throw Error(ErrorCode::MalformedLine, "config line " + std::to_string(line_no) + ": bad section name");
      }
      continue;
    }
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::MalformedLine, "config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const auto key = std::string(text::trim(view.substr(0, eq)));
    if (key.empty() || key.find_first_of(" .\t") != std::string::npos) {
      throw Error(ErrorCode::MalformedLine, "config line " + std::to_string(line_no) + ": bad key");
    }
    auto value = ValueParser(view.substr(eq + 1), line_no).parse_all();
    cfg.set(section.empty() ? key : section + "." + key, std::move(value));
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config file " + path.string());
  return parse(in, path.parent_path());
}

const nlohmann::json* Config::find(std::string_view key) const {
  const auto [section, name] = split_key(key);
  const json* scope = &values_;
  if (!section.empty()) {
    const auto it = values_.find(section);
    if (it == values_.end() || !it->is_object()) return nullptr;
    scope = &*it;
  }
  const auto it = scope->find(name);
  return it == scope->end() ? nullptr : &*it;
}

bool Config::has(std::string_view key) const { return find(key) != nullptr; }

void Config::set(std::string_view key, nlohmann::json value) {
  const auto [section, name] = split_key(key);
  if (section.empty()) {
    values_[name] = std::move(value);
  } else {
    values_[section][name] = std::move(value);
  }
}

namespace {

[[noreturn]] void type_error(std::string_view key, const char* expected) {
  throw Error(ErrorCode::InvalidArgument, "config key '" + std::string(key) + "' must be " + expected);
}

}  // namespace

std::optional<std::string> Config::get_string(std::string_view key) const {
  const auto* v = find(key);
  if (!v) return std::nullopt;
  if (!v->is_string()) type_error(key, "a string");
  return v->get<std::string>();
}

std::optional<double> Config::get_double(std::string_view key) const {
  const auto* v = find(key);
  if (!v) return std::nullopt;
  if (!v->is_number()) type_error(key, "a number");
  return v->get<double>();
}

std::optional<std::int64_t> Config::get_int(std::string_view key) const {
  const auto* v = find(key);
  if (!v) return std::nullopt;
  if (!v->is_number_integer()) type_error(key, "an integer");
  return v->get<std::int64_t>();
}

std::optional<bool> Config::get_bool(std::string_view key) const {
  const auto* v = find(key);
  if (!v) return std::nullopt;
  if (!v->is_boolean()) type_error(key, "a boolean");
  return v->get<bool>();
}

std::optional<std::filesystem::path> Config::get_path(std::string_view key) const {
  const auto s = get_string(key);
  if (!s) return std::nullopt;
  std::filesystem::path p(*s);
  if (p.is_relative() && !base_dir_.empty()) p = base_dir_ / p;
  return p;
}

}  // namespace cog
