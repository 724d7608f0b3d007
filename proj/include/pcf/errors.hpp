#pragma once

#include <stdexcept>
#include <string>

namespace pcf {

enum class Errc {
  kInvalidArgument,
  kDegenerateBcs,
  kInsufficientData,
  kDimMismatch,
  kSingularHomography,
  kBadMagic,
  kTruncatedFile,
  kIo,
  kEmptyFlow,
  kNoCandidate,
  kDegenerateAfterRetries,
  kInvalidFlowAtVertex,
  kNonPositiveVariance,
  kEmptySamples,
  kNonFinite,
  kEmptySet,
  kLengthMismatch,
  kTooFewPoints,
  kDegenerate,
};

const char* to_string(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace pcf
