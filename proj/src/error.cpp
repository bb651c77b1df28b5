#include "cog/error.hpp"

namespace cog {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::MultipleRoots: return "MultipleRoots";
    case ErrorCode::EmptyTaxonomy: return "EmptyTaxonomy";
    case ErrorCode::UnknownConcept: return "UnknownConcept";
    case ErrorCode::UnknownConceptInMeta: return "UnknownConceptInMeta";
    case ErrorCode::EmptySeenSet: return "EmptySeenSet";
    case ErrorCode::ConceptInSeenSet: return "ConceptInSeenSet";
    case ErrorCode::SeenNotInTaxonomy: return "SeenNotInTaxonomy";
    case ErrorCode::BannedRootNotInTaxonomy: return "BannedRootNotInTaxonomy";
    case ErrorCode::UnknownScoreId: return "UnknownScoreId";
    case ErrorCode::MissingScore: return "MissingScore";
    case ErrorCode::NotEnoughConcepts: return "NotEnoughConcepts";
    case ErrorCode::TooFewImages: return "TooFewImages";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::TrailingData: return "TrailingData";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::MissingImageId: return "MissingImageId";
    case ErrorCode::EmptyManifest: return "EmptyManifest";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyTestSet: return "EmptyTestSet";
    case ErrorCode::BaselineMissing: return "BaselineMissing";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
  }
  return "Unknown";
}

}  // namespace cog
