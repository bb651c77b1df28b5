#include "cog/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <iterator>
#include <ostream>
#include <unordered_map>

#include "cog/error.hpp"
#include "text.hpp"

namespace cog {

namespace {

constexpr char kMagic[4] = {'C', 'O', 'G', 'F'};

template <typename T>
void put_le(std::string& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>(u & 0xFF));
    u = static_cast<U>(u >> 8);
  }
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<std::make_unsigned_t<T>>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    const auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) {
    if (remaining() < n) {
      throw Error(ErrorCode::TruncatedPayload, std::string("stream ended while reading ") + what);
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<ConceptId> numbered_concepts(std::size_t count) {
  std::vector<ConceptId> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(std::to_string(i));
  return out;
}

void validate(const FeatureTable& t) {
  if (t.rows == 0 || t.dim == 0) throw Error(ErrorCode::InvalidArgument, "feature table must have n >= 1 and d >= 1");
  if (t.values.size() != t.rows * t.dim || t.labels.size() != t.rows) {
    throw Error(ErrorCode::InvalidArgument, "feature table shape does not match its buffers");
  }
  if (t.has_image_ids() && t.image_ids.size() != t.rows) {
    throw Error(ErrorCode::InvalidArgument, "image id count does not match row count");
  }
  for (std::size_t i = 0; i < t.rows; ++i) {
    if (t.labels[i] >= t.num_classes()) {
      throw Error(ErrorCode::LabelOutOfRange, "row " + std::to_string(i) + " has label " +
                                                  std::to_string(t.labels[i]) + " but C = " +
                                                  std::to_string(t.num_classes()));
    }
  }
}

void write_features(std::ostream& out, const FeatureTable& t) {
  validate(t);
  std::string buf;
  buf.reserve(24 + t.values.size() * 4 + t.rows * 4);
  buf.append(kMagic, 4);
  put_le<std::uint32_t>(buf, kCogfVersion);
  put_le<std::uint64_t>(buf, t.rows);
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(t.dim));
  put_le<std::uint32_t>(buf, t.has_image_ids() ? kCogfFlagImageIds : 0u);
  for (float v : t.values) put_le<std::uint32_t>(buf, std::bit_cast<std::uint32_t>(v));
  for (auto l : t.labels) put_le<std::uint32_t>(buf, l);
  for (const auto& id : t.image_ids) {
    if (id.size() > 0xFFFF) throw Error(ErrorCode::InvalidArgument, "image id longer than 65535 bytes");
    put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(id.size()));
    buf += id;
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorCode::Io, "failed writing COGF stream");
}

FeatureTable load_features(std::istream& in, std::optional<std::size_t> num_classes) {
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ByteReader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, "stream does not start with \"COGF\"");
  }
  r.take(4, "magic");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCogfVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "COGF version " + std::to_string(version) + " (supported: 1)");
  }
  FeatureTable t;
  const auto n = r.get<std::uint64_t>("row count");
  t.dim = r.get<std::uint32_t>("dimension");
  const auto flags = r.get<std::uint32_t>("flags");
  if (n == 0 || t.dim == 0) throw Error(ErrorCode::InvalidArgument, "COGF header declares an empty table");
  // Guard the size arithmetic before allocating anything.
  if (n > r.remaining() / 4 / t.dim) throw Error(ErrorCode::TruncatedPayload, "header claims more rows than the payload holds");
  t.rows = static_cast<std::size_t>(n);

  t.values.resize(t.rows * t.dim);
  for (auto& v : t.values) v = std::bit_cast<float>(r.get<std::uint32_t>("feature values"));
  t.labels.resize(t.rows);
  std::uint32_t max_label = 0;
  for (auto& l : t.labels) {
    l = r.get<std::uint32_t>("labels");
    max_label = std::max(max_label, l);
  }
  if (flags & kCogfFlagImageIds) {
    t.image_ids.reserve(t.rows);
    for (std::size_t i = 0; i < t.rows; ++i) {
      const auto len = r.get<std::uint16_t>("image id length");
      t.image_ids.emplace_back(r.take(len, "image id"));
    }
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::TrailingData, std::to_string(r.remaining()) + " unexpected bytes after the payload");
  }
  t.concepts = numbered_concepts(num_classes.value_or(std::size_t{max_label} + 1));
  validate(t);
  return t;
}

FeatureTable read_feature_tsv(std::istream& in) {
  FeatureTable t;
  std::string line;
  std::size_t line_no = 0;
  std::uint32_t max_label = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = text::chomp(line);
    if (text::skippable(view)) continue;
    const auto fields = text::split(view, '\t');
    const auto where = "line " + std::to_string(line_no);
    if (fields.size() < 3 || fields[0].empty()) {
      throw Error(ErrorCode::MalformedLine, where + ": expected 'image_id<TAB>label<TAB>f1...'");
    }
    const std::size_t d = fields.size() - 2;
    if (t.rows == 0) {
      t.dim = d;
    } else if (d != t.dim) {
      throw Error(ErrorCode::MalformedLine, where + ": " + std::to_string(d) + " values, expected " + std::to_string(t.dim));
    }
    const auto label = text::parse_number<std::uint32_t>(fields[1]);
    if (!label) throw Error(ErrorCode::MalformedLine, where + ": bad label");
    for (std::size_t j = 2; j < fields.size(); ++j) {
      const auto v = text::parse_number<float>(fields[j]);
      if (!v) throw Error(ErrorCode::MalformedLine, where + ": bad value in column " + std::to_string(j + 1));
      t.values.push_back(*v);
    }
    t.image_ids.emplace_back(fields[0]);
    t.labels.push_back(*label);
    max_label = std::max(max_label, *label);
    ++t.rows;
  }
  t.concepts = numbered_concepts(std::size_t{max_label} + 1);
  validate(t);
  return t;
}

std::size_t l2_normalize_in_place(FeatureTable& t) {
  std::size_t zero_rows = 0;
  for (std::size_t i = 0; i < t.rows; ++i) {
    auto r = t.row(i);
    double sq = 0.0;
    for (float v : r) sq += static_cast<double>(v) * v;
    if (sq == 0.0) {
      ++zero_rows;
      continue;
    }
    const double norm = std::sqrt(sq);
    for (float& v : r) v = static_cast<float>(v / norm);
  }
  return zero_rows;
}

FeatureTable l2_normalize(FeatureTable t, std::size_t* zero_rows) {
  const auto zeros = l2_normalize_in_place(t);
  if (zero_rows) *zero_rows = zeros;
  return t;
}

FeatureTable select_rows(const FeatureTable& t, std::span<const std::size_t> rows) {
  FeatureTable out;
  out.rows = rows.size();
  out.dim = t.dim;
  out.concepts = t.concepts;
  out.values.reserve(rows.size() * t.dim);
  out.labels.reserve(rows.size());
  for (auto i : rows) {
    const auto r = t.row(i);
    out.values.insert(out.values.end(), r.begin(), r.end());
    out.labels.push_back(t.labels[i]);
    if (t.has_image_ids()) out.image_ids.push_back(t.image_ids[i]);
  }
  return out;
}

TrainTestSplit split_by_manifest(const FeatureTable& t, const LevelManifest& manifest) {
  std::size_t listed = 0;
  for (const auto& [concept_id, entry] : manifest) listed += entry.train.size() + entry.test.size();
  if (manifest.empty() || listed == 0) throw Error(ErrorCode::EmptyManifest, "manifest lists no images");
  if (!t.has_image_ids()) {
    throw Error(ErrorCode::InvalidArgument, "feature table has no image ids to match against the manifest");
  }
  std::unordered_map<std::string_view, std::size_t> by_id;
  by_id.reserve(t.rows);
  for (std::size_t i = 0; i < t.rows; ++i) {
    if (!by_id.emplace(t.image_ids[i], i).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate image id '" + t.image_ids[i] + "' in feature table");
    }
  }

  std::vector<std::string> missing;
  std::size_t missing_count = 0;
  std::vector<std::size_t> train_rows, test_rows;
  std::vector<std::uint32_t> train_labels, test_labels;
  auto collect = [&](const std::vector<std::string>& ids, std::uint32_t label, std::vector<std::size_t>& rows,
                     std::vector<std::uint32_t>& labels) {
    for (const auto& id : ids) {
      const auto it = by_id.find(id);
      if (it == by_id.end()) {
        if (missing.size() < 10) missing.push_back(id);
        ++missing_count;
        continue;
      }
      rows.push_back(it->second);
      labels.push_back(label);
    }
  };
  for (std::size_t k = 0; k < manifest.size(); ++k) {
    collect(manifest[k].second.train, static_cast<std::uint32_t>(k), train_rows, train_labels);
    collect(manifest[k].second.test, static_cast<std::uint32_t>(k), test_rows, test_labels);
  }
  if (missing_count > 0) {
    std::string names;
    for (const auto& id : missing) names += (names.empty() ? "" : ", ") + id;
    throw Error(ErrorCode::MissingImageId,
                std::to_string(missing_count) + " manifest image ids absent from the features: " + names);
  }

  std::vector<ConceptId> concepts;
  for (const auto& [concept_id, entry] : manifest) concepts.push_back(concept_id);
  TrainTestSplit split{select_rows(t, train_rows), select_rows(t, test_rows)};
  split.train.labels = std::move(train_labels);
  split.test.labels = std::move(test_labels);
  split.train.concepts = concepts;
  split.test.concepts = std::move(concepts);
  return split;
}

}  // namespace cog
