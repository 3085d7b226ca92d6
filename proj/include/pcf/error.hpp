#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pcf {

enum class Errc {
  MalformedFile,
  DimMismatch,
  MissingDim,
  IoError,
  EmptyCorpus,
  NeedTwoLanguages,
  UnknownLanguage,
  EmptyNeighborhood,
  IndexOutOfRange,
  RowCountMismatch,
  EmptyMatrix,
  NoAdjacent,
  TooShort,
  TooFewPairs,
  DegenerateLabels,
  DivergedTraining,
  DegenerateRange,
  LengthMismatch,
  StaleInput,
  UsageError,
};

constexpr std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::MalformedFile: return "MalformedFile";
    case Errc::DimMismatch: return "DimMismatch";
    case Errc::MissingDim: return "MissingDim";
    case Errc::IoError: return "IoError";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::NeedTwoLanguages: return "NeedTwoLanguages";
    case Errc::UnknownLanguage: return "UnknownLanguage";
    case Errc::EmptyNeighborhood: return "EmptyNeighborhood";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::RowCountMismatch: return "RowCountMismatch";
    case Errc::EmptyMatrix: return "EmptyMatrix";
    case Errc::NoAdjacent: return "NoAdjacent";
    case Errc::TooShort: return "TooShort";
    case Errc::TooFewPairs: return "TooFewPairs";
    case Errc::DegenerateLabels: return "DegenerateLabels";
    case Errc::DivergedTraining: return "DivergedTraining";
    case Errc::DegenerateRange: return "DegenerateRange";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::StaleInput: return "StaleInput";
    case Errc::UsageError: return "UsageError";
  }
  return "Unknown";
}

// All library failures are reported through this type; code() carries the
// machine-checkable kind, what() a human-readable message.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code),
        message_(message) {}

  Errc code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }

 private:
  Errc code_;
  std::string message_;
};

}  // namespace pcf
