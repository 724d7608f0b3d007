#include "pcf/errors.hpp"

namespace pcf {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kDegenerateBcs: return "DegenerateBcs";
    case Errc::kInsufficientData: return "InsufficientData";
    case Errc::kDimMismatch: return "DimMismatch";
    case Errc::kSingularHomography: return "SingularHomography";
    case Errc::kBadMagic: return "BadMagic";
    case Errc::kTruncatedFile: return "TruncatedFile";
    case Errc::kIo: return "Io";
    case Errc::kEmptyFlow: return "EmptyFlow";
    case Errc::kNoCandidate: return "NoCandidate";
    case Errc::kDegenerateAfterRetries: return "DegenerateAfterRetries";
    case Errc::kInvalidFlowAtVertex: return "InvalidFlowAtVertex";
    case Errc::kNonPositiveVariance: return "NonPositiveVariance";
    case Errc::kEmptySamples: return "EmptySamples";
    case Errc::kNonFinite: return "NonFinite";
    case Errc::kEmptySet: return "EmptySet";
    case Errc::kLengthMismatch: return "LengthMismatch";
    case Errc::kTooFewPoints: return "TooFewPoints";
    case Errc::kDegenerate: return "Degenerate";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace pcf
