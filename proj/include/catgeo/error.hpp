#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace catgeo {

enum class Errc {
  BadMagic,
  VersionUnsupported,
  DimensionMismatch,
  NonFiniteEntry,
  ZeroRows,
  IoFailure,
  NonPositiveSpectrum,
  SchemaError,
  CycleDetected,
  TokenOutOfRange,
  EmptyHierarchy,
  UnknownId,
  Precondition,
  TooFewTokens,
  DegenerateDirection,
  EmptyGroup,
  NoEligibleTuples,
  DependentBasis,
  EmptySet,
  DimensionTooSmall,
  InvalidArgument,
};

std::string_view errc_name(Errc code) noexcept;

// Every library failure is reported as an Error carrying a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace catgeo
