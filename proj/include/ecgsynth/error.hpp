#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ecgsynth {

enum class ErrorCode {
  MalformedHeader,
  UnsupportedFormat,
  TruncatedPayload,
  GainZero,
  OutOfRange,
  UnknownLead,
  IoFailure,
  SignalTooShort,
  InvalidCutoffs,
  NoBeatsFound,
  ImplausibleBeat,
  MissingLandmark,
  InsufficientBeats,
  LeadMissing,
  EmptySequence,
  EmptyLibrary,
  InsufficientData,
  DegenerateTarget,
  ModelMissing,
  ModelFormat,
  LengthMismatch,
  MissingLead,
  WindowOutOfRange,
  ZeroVariance,
  RecordTooShort,
  InvalidConfig,
  ScheduleOutOfRange,
};

std::string_view error_code_name(ErrorCode code);

// Every failure the library reports carries one of the codes above so callers
// (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ecgsynth
