#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cog/levels.hpp"
#include "cog/taxonomy.hpp"

namespace cog {

/// n x d float32 features with integer labels. Label k names concepts[k].
struct FeatureTable {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<float> values;  // row-major, rows * dim
  std::vector<std::uint32_t> labels;
  std::vector<ConceptId> concepts;
  std::vector<std::string> image_ids;  // empty, or one per row

  std::size_t num_classes() const { return concepts.size(); }
  bool has_image_ids() const { return !image_ids.empty(); }

  std::span<const float> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
  std::span<float> row(std::size_t i) { return {values.data() + i * dim, dim}; }
};

/// Checks shape consistency and label range. Throws InvalidArgument or
/// LabelOutOfRange.
void validate(const FeatureTable& t);

/// Placeholder concept names "0", "1", ... for tables without a concept index.
std::vector<ConceptId> numbered_concepts(std::size_t count);

inline constexpr std::uint32_t kCogfVersion = 1;
inline constexpr std::uint32_t kCogfFlagImageIds = 1u;

/// COGF, little-endian:
///   "COGF" | u32 version | u64 n | u32 d | u32 flags |
///   n*d f32 row-major | n u32 labels | [flags&1: n x (u16 len, bytes)]
void write_features(std::ostream& out, const FeatureTable& t);

/// Reads a COGF stream. With `num_classes` the label range is checked
/// against it; otherwise the class count is max(label) + 1. Concept names
/// are placeholders (see numbered_concepts) because COGF stores none.
/// Throws BadMagic, UnsupportedVersion, TruncatedPayload, TrailingData,
/// LabelOutOfRange.
FeatureTable load_features(std::istream& in, std::optional<std::size_t> num_classes = std::nullopt);

/// Reads `image_id<TAB>label<TAB>f1<TAB>...<TAB>fd` lines (the `features
/// pack` input). Every line must carry the same d.
FeatureTable read_feature_tsv(std::istream& in);

/// Divides each row by its Euclidean norm; all-zero rows stay zero.
/// Returns the number of zero rows.
std::size_t l2_normalize_in_place(FeatureTable& t);
FeatureTable l2_normalize(FeatureTable t, std::size_t* zero_rows = nullptr);

/// Rows in the given order; labels and the concept index are kept.
FeatureTable select_rows(const FeatureTable& t, std::span<const std::size_t> rows);

struct TrainTestSplit {
  FeatureTable train;
  FeatureTable test;
};

/// Partitions rows by image id. Output labels follow the manifest's
/// concept order. Throws EmptyManifest, MissingImageId (first 10 ids).
TrainTestSplit split_by_manifest(const FeatureTable& t, const LevelManifest& manifest);

}  // namespace cog
