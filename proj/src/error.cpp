#include "catgeo/error.hpp"

namespace catgeo {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::BadMagic: return "BadMagic";
    case Errc::VersionUnsupported: return "VersionUnsupported";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NonFiniteEntry: return "NonFiniteEntry";
    case Errc::ZeroRows: return "ZeroRows";
    case Errc::IoFailure: return "IoFailure";
    case Errc::NonPositiveSpectrum: return "NonPositiveSpectrum";
    case Errc::SchemaError: return "SchemaError";
    case Errc::CycleDetected: return "CycleDetected";
    case Errc::TokenOutOfRange: return "TokenOutOfRange";
    case Errc::EmptyHierarchy: return "EmptyHierarchy";
    case Errc::UnknownId: return "UnknownId";
    case Errc::Precondition: return "Precondition";
    case Errc::TooFewTokens: return "TooFewTokens";
    case Errc::DegenerateDirection: return "DegenerateDirection";
    case Errc::EmptyGroup: return "EmptyGroup";
    case Errc::NoEligibleTuples: return "NoEligibleTuples";
    case Errc::DependentBasis: return "DependentBasis";
    case Errc::EmptySet: return "EmptySet";
    case Errc::DimensionTooSmall: return "DimensionTooSmall";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace catgeo
