#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cog {

enum class ErrorCode {
  InvalidArgument,
  Io,
  MalformedLine,
  CycleDetected,
  MultipleRoots,
  EmptyTaxonomy,
  UnknownConcept,
  UnknownConceptInMeta,
  EmptySeenSet,
  ConceptInSeenSet,
  SeenNotInTaxonomy,
  BannedRootNotInTaxonomy,
  UnknownScoreId,
  MissingScore,
  NotEnoughConcepts,
  TooFewImages,
  BadMagic,
  UnsupportedVersion,
  TruncatedPayload,
  TrailingData,
  LabelOutOfRange,
  MissingImageId,
  EmptyManifest,
  MissingClass,
  DivergedLoss,
  DimensionMismatch,
  EmptyTestSet,
  BaselineMissing,
  SchemaMismatch,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can branch without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cog
