#include "olu/error.hpp"

namespace olu {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::InsufficientHistory: return "InsufficientHistory";
    case Errc::MissingGradState: return "MissingGradState";
    case Errc::NonInsertEvent: return "NonInsertEvent";
    case Errc::MissingHistory: return "MissingHistory";
    case Errc::NegativeInput: return "NegativeInput";
    case Errc::EmptyTrace: return "EmptyTrace";
    case Errc::IntervalTooShort: return "IntervalTooShort";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::InvalidRho: return "InvalidRho";
    case Errc::InvalidPrivacyParams: return "InvalidPrivacyParams";
    case Errc::NegativeSigma: return "NegativeSigma";
    case Errc::InvalidAxis: return "InvalidAxis";
    case Errc::EmptyResults: return "EmptyResults";
    case Errc::ParseError: return "ParseError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace olu
