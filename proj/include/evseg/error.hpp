#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evseg {

enum class Errc {
  MalformedLine,
  OutOfBounds,
  NonMonotonicTimestamp,
  BadPolarity,
  BadMagic,
  TruncatedRecord,
  CountMismatch,
  GeometryMismatch,
  EmptyStream,
  InvalidArgument,
  OutsideWindow,
  BadChannel,
  CropTooLarge,
  ParseError,
  OverlappingIntervals,
  DegenerateCrop,
  BadClassId,
  EmptyEvaluation,
  AllPixelsIgnored,
  DivergenceDetected,
  ChannelMismatch,
  Io,
};

inline const char* errc_name(Errc code) {
  switch (code) {
    case Errc::MalformedLine: return "MalformedLine";
    case Errc::OutOfBounds: return "OutOfBounds";
    case Errc::NonMonotonicTimestamp: return "NonMonotonicTimestamp";
    case Errc::BadPolarity: return "BadPolarity";
    case Errc::BadMagic: return "BadMagic";
    case Errc::TruncatedRecord: return "TruncatedRecord";
    case Errc::CountMismatch: return "CountMismatch";
    case Errc::GeometryMismatch: return "GeometryMismatch";
    case Errc::EmptyStream: return "EmptyStream";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::OutsideWindow: return "OutsideWindow";
    case Errc::BadChannel: return "BadChannel";
    case Errc::CropTooLarge: return "CropTooLarge";
    case Errc::ParseError: return "ParseError";
    case Errc::OverlappingIntervals: return "OverlappingIntervals";
    case Errc::DegenerateCrop: return "DegenerateCrop";
    case Errc::BadClassId: return "BadClassId";
    case Errc::EmptyEvaluation: return "EmptyEvaluation";
    case Errc::AllPixelsIgnored: return "AllPixelsIgnored";
    case Errc::DivergenceDetected: return "DivergenceDetected";
    case Errc::ChannelMismatch: return "ChannelMismatch";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

// All library failures are reported through this exception. `line()` is the
// 1-based line (CSV, manifest) or record (EVS1) number, 0 when not applicable.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, std::size_t line = 0)
      : std::runtime_error(format(code, what, line)), code_(code), line_(line) {}

  Errc code() const noexcept { return code_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(Errc code, const std::string& what, std::size_t line) {
    std::string msg = errc_name(code);
    if (line != 0) msg += " at " + std::to_string(line);
    if (!what.empty()) msg += ": " + what;
    return msg;
  }

  Errc code_;
  std::size_t line_;
};

}  // namespace evseg
